#include "sudoku_grpo/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sudoku_grpo/error.hpp"
#include "sudoku_grpo/hash.hpp"

namespace sgrpo {
namespace {

using nlohmann::json;

constexpr std::string_view kMagic = "SGRPOCKP";
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_floats(std::string& out, const std::vector<float>& values) {
  for (float f : values) put_u32(out, std::bit_cast<std::uint32_t>(f));
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw_input("checkpoint: truncated data");
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint64_t uint(int width) {
    auto s = take(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[static_cast<std::size_t>(i)]))
           << (8 * i);
    }
    return v;
  }
  std::vector<float> floats(std::size_t n) {
    std::vector<float> out(n);
    for (auto& f : out) f = std::bit_cast<float>(static_cast<std::uint32_t>(uint(4)));
    return out;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

json config_to_json(const ModelConfig& c) {
  return json{{"n_layers", c.n_layers},     {"n_heads", c.n_heads},
              {"d_model", c.d_model},       {"vocab_size", c.vocab_size},
              {"max_seq_len", c.max_seq_len}, {"seed", c.seed}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.n_layers = j.at("n_layers").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.d_model = j.at("d_model").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.max_seq_len = j.at("max_seq_len").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

}  // namespace

std::string Checkpoint::serialize() const {
  ParamLayout layout(config);
  if (params.size() != layout.total()) throw_input("checkpoint: parameter count does not match config");
  const bool has_moments = !opt_first_moment.empty();
  if (has_moments &&
      (opt_first_moment.size() != params.size() || opt_second_moment.size() != params.size())) {
    throw_input("checkpoint: optimizer moments do not match parameter count");
  }
  json tensors = json::array();
  for (const auto& t : layout.tensors()) {
    tensors.push_back({{"name", t.name}, {"shape", {t.rows, t.cols}}, {"offset", t.offset}});
  }
  json header{
      {"format", kVersion},
      {"dtype", "float32"},
      {"config", config_to_json(config)},
      {"vocab_hash", vocab_hash},
      {"n_params", params.size()},
      {"tensors", tensors},
      {"optimizer",
       {{"lr", optimizer.lr},
        {"weight_decay", optimizer.weight_decay},
        {"beta1", optimizer.beta1},
        {"beta2", optimizer.beta2},
        {"eps", optimizer.eps},
        {"step", opt_step},
        {"has_moments", has_moments}}},
      {"rng_state", rng_state},
      {"step", step},
      {"metadata", metadata},
  };
  const std::string head = header.dump();
  std::string out;
  out.reserve(kMagic.size() + 12 + head.size() + params.size() * 4 * (has_moments ? 3 : 1));
  out.append(kMagic);
  put_u32(out, kVersion);
  put_u64(out, head.size());
  out.append(head);
  put_floats(out, params);
  if (has_moments) {
    put_floats(out, opt_first_moment);
    put_floats(out, opt_second_moment);
  }
  return out;
}

Checkpoint Checkpoint::deserialize(std::string_view bytes) {
  ByteReader in(bytes);
  if (in.take(kMagic.size()) != kMagic) throw_input("checkpoint: bad magic");
  if (in.uint(4) != kVersion) throw_input("checkpoint: unsupported format version");
  const auto head_len = in.uint(8);
  json header;
  try {
    header = json::parse(in.take(head_len));
  } catch (const json::exception& e) {
    throw_input(std::string("checkpoint: corrupt header: ") + e.what());
  }
  Checkpoint c;
  try {
    c.config = config_from_json(header.at("config"));
    c.vocab_hash = header.at("vocab_hash").get<std::string>();
    const auto& opt = header.at("optimizer");
    c.optimizer.lr = opt.at("lr").get<double>();
    c.optimizer.weight_decay = opt.at("weight_decay").get<double>();
    c.optimizer.beta1 = opt.at("beta1").get<double>();
    c.optimizer.beta2 = opt.at("beta2").get<double>();
    c.optimizer.eps = opt.at("eps").get<double>();
    c.opt_step = opt.at("step").get<std::int64_t>();
    const bool has_moments = opt.at("has_moments").get<bool>();
    c.rng_state = header.at("rng_state").get<std::string>();
    c.step = header.at("step").get<std::int64_t>();
    c.metadata = header.at("metadata").get<std::map<std::string, std::string>>();
    const auto n = header.at("n_params").get<std::size_t>();
    if (n != ParamLayout(c.config).total()) throw_input("checkpoint: n_params disagrees with config");
    c.params = in.floats(n);
    if (has_moments) {
      c.opt_first_moment = in.floats(n);
      c.opt_second_moment = in.floats(n);
    }
  } catch (const json::exception& e) {
    throw_input(std::string("checkpoint: bad header field: ") + e.what());
  }
  if (!in.done()) throw_input("checkpoint: trailing bytes");
  return c;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  const std::string bytes = serialize();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIo, "write failed for checkpoint " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return deserialize(ss.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::string Checkpoint::content_hash() const { return sha256_hex(serialize()); }

Checkpoint make_checkpoint(const Transformer<float>& model, const std::string& vocab_hash,
                           const AdamW<float>* optimizer, std::int64_t step) {
  Checkpoint c;
  c.config = model.config();
  c.vocab_hash = vocab_hash;
  c.params.assign(model.params().begin(), model.params().end());
  if (optimizer != nullptr) {
    c.optimizer = optimizer->hyper();
    c.opt_first_moment = optimizer->first_moment();
    c.opt_second_moment = optimizer->second_moment();
    c.opt_step = optimizer->step_count();
  }
  c.step = step;
  return c;
}

Transformer<float> model_from_checkpoint(const Checkpoint& ckpt) {
  Transformer<float> model(ckpt.config);
  if (ckpt.params.size() != model.num_params()) throw_input("checkpoint: parameter count mismatch");
  model.params().assign(ckpt.params.begin(), ckpt.params.end());
  return model;
}

AdamW<float> optimizer_from_checkpoint(const Checkpoint& ckpt, const AdamWHyper& fallback) {
  if (ckpt.opt_first_moment.empty()) return AdamW<float>(ckpt.params.size(), fallback);
  return AdamW<float>(ckpt.optimizer, ckpt.opt_first_moment, ckpt.opt_second_moment,
                      ckpt.opt_step);
}

void require_vocab(const Checkpoint& ckpt, const Vocabulary& vocab) {
  if (ckpt.vocab_hash != vocab.hash()) {
    throw Error(ErrorKind::kProvenance,
                "checkpoint vocabulary hash " + ckpt.vocab_hash.substr(0, 12) +
                    " does not match the data vocabulary " + vocab.hash().substr(0, 12));
  }
}

}  // namespace sgrpo
