// sudoku-grpo: batch workflows over the sudoku_grpo library.
//
//   gen-data          write train/validation/test JSONL corpora
//   sft               supervised fine-tuning on solver or random order
//   bootstrap-scales  calibrate frozen reward scales for one alpha
//   grpo              GRPO post-training against frozen scales
//   eval              greedy-decoding evaluation of a checkpoint
//   sweep             one GRPO run per alpha plus both fine-tuned baselines
//
// Every command writes <output>.manifest.json (or DIR/manifest.json) with the
// flags, effective configuration, seeds, and SHA-256 of inputs and outputs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sudoku_grpo/checkpoint.hpp"
#include "sudoku_grpo/dataset.hpp"
#include "sudoku_grpo/error.hpp"
#include "sudoku_grpo/eval.hpp"
#include "sudoku_grpo/grpo.hpp"
#include "sudoku_grpo/hash.hpp"
#include "sudoku_grpo/kv_config.hpp"
#include "sudoku_grpo/reward.hpp"
#include "sudoku_grpo/sft.hpp"
#include "sudoku_grpo/token_codec.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace sgrpo::cli {
namespace {

constexpr const char* kToolVersion = "0.1.0";

class Manifest {
 public:
  Manifest(std::string command, const CLI::App& app) {
    doc_["tool"] = "sudoku-grpo";
    doc_["version"] = kToolVersion;
    doc_["command"] = std::move(command);
    json flags = json::object();
    for (const CLI::Option* opt : app.get_options()) {
      if (opt->count() == 0 || opt->get_name() == "--help") continue;
      const auto& res = opt->results();
      flags[opt->get_name()] = res.size() == 1 ? json(res[0]) : json(res);
    }
    doc_["flags"] = flags;
    doc_["inputs"] = json::object();
    doc_["artifacts"] = json::object();
  }

  void input(const std::string& label, const fs::path& path) {
    doc_["inputs"][label] = {{"path", path.string()}, {"sha256", sha256_file(path)}};
  }
  // Artifacts are keyed by file name so manifests do not depend on the output location.
  void artifact(const fs::path& path) {
    doc_["artifacts"][path.filename().string()] = sha256_file(path);
  }
  json& operator[](const std::string& key) { return doc_[key]; }

  void write(const fs::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
    out << doc_.dump(2) << "\n";
  }

 private:
  json doc_;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

fs::path sibling(const fs::path& base, const std::string& suffix) {
  return fs::path(base.string() + suffix);
}

KvConfig load_config(const std::string& path) {
  return path.empty() ? KvConfig{} : KvConfig::load(path);
}

// Flags given on the command line override keys from the config file.
template <typename V>
void override_key(KvConfig& kv, const CLI::Option* opt, const std::string& key, const V& value) {
  if (opt->count() == 0) return;
  std::ostringstream s;
  s.precision(17);
  s << value;
  kv.set(key, s.str());
}

json kv_json(const KvConfig& kv) {
  json j = json::object();
  for (const auto& [k, v] : kv.values()) j[k] = v;
  return j;
}

int corpus_side(const std::vector<PuzzleRecord>& records, const fs::path& where) {
  if (records.empty()) throw_input("no records in " + where.string());
  return records.front().puzzle.side();
}

ModelConfig model_config_from(const KvConfig& kv, const TokenCodec& codec, bool paper_scale,
                              std::uint64_t seed) {
  ModelConfig base = paper_scale ? ModelConfig::paper(codec.vocab().size(), codec.max_len(), seed)
                                 : ModelConfig::desk(codec.vocab().size(), codec.max_len(), seed);
  base.n_layers = static_cast<int>(kv.get_int("model.n_layers", base.n_layers));
  base.n_heads = static_cast<int>(kv.get_int("model.n_heads", base.n_heads));
  base.d_model = static_cast<int>(kv.get_int("model.d_model", base.d_model));
  base.validate();
  return base;
}

json model_json(const ModelConfig& c) {
  return {{"n_layers", c.n_layers}, {"n_heads", c.n_heads}, {"d_model", c.d_model},
          {"vocab_size", c.vocab_size}, {"max_seq_len", c.max_seq_len}, {"seed", c.seed}};
}

json sft_json(const SftConfig& c) {
  return {{"order", std::string(order_name(c.order))},
          {"lr", c.lr},
          {"batch_size", c.batch_size},
          {"weight_decay", c.weight_decay},
          {"patience", c.patience},
          {"max_steps", c.max_steps},
          {"eval_interval", c.eval_interval},
          {"val_limit", c.val_limit},
          {"max_new_tokens", c.max_new_tokens},
          {"seed", c.seed}};
}

json grpo_json(const GrpoConfig& c) {
  return {{"group_size", c.group_size},   {"lr", c.lr},
          {"kl_beta", c.kl_beta},         {"clip_eps", c.clip_eps},
          {"max_new_tokens", c.max_new_tokens}, {"batch_prompts", c.batch_prompts},
          {"steps", c.steps},             {"alpha", c.alpha},
          {"temperature", c.temperature}, {"weight_decay", c.weight_decay},
          {"eval_interval", c.eval_interval}, {"val_limit", c.val_limit},
          {"seed", c.seed}};
}

struct Corpus {
  std::vector<PuzzleRecord> train, validation, test;
};

Corpus load_dir(const fs::path& dir, Manifest& manifest, bool need_test = false) {
  Corpus c;
  c.train = load_split(dir, Split::kTrain);
  c.validation = load_split(dir, Split::kValidation);
  manifest.input("train", split_path(dir, Split::kTrain));
  manifest.input("validation", split_path(dir, Split::kValidation));
  if (need_test) {
    c.test = load_split(dir, Split::kTest);
    manifest.input("test", split_path(dir, Split::kTest));
  }
  return c;
}

void log_line(const std::string& text) { std::cerr << text << std::endl; }

// ---------------------------------------------------------------- gen-data

struct GenDataArgs {
  int n_train = 2000, n_val = 512, n_test = 512;
  int givens_min = 30, givens_max = 36, side = 9;
  std::uint64_t seed = 0;
  std::string out;
};

void register_gen_data(CLI::App& root, GenDataArgs& a) {
  auto* cmd = root.add_subcommand("gen-data", "Generate train/validation/test corpora");
  cmd->add_option("--n-train", a.n_train)->capture_default_str();
  cmd->add_option("--n-val", a.n_val)->capture_default_str();
  cmd->add_option("--n-test", a.n_test)->capture_default_str();
  cmd->add_option("--givens-min", a.givens_min)->capture_default_str();
  cmd->add_option("--givens-max", a.givens_max)->capture_default_str();
  cmd->add_option("--side", a.side, "Grid side (4 or 9)")->capture_default_str();
  cmd->add_option("--seed", a.seed)->capture_default_str();
  cmd->add_option("--out", a.out, "Output directory")->required();
  cmd->callback([&a, cmd] {
    CorpusConfig cfg;
    cfg.n_train = a.n_train;
    cfg.n_val = a.n_val;
    cfg.n_test = a.n_test;
    cfg.givens_min = a.givens_min;
    cfg.givens_max = a.givens_max;
    cfg.side = a.side;
    cfg.seed = a.seed;
    const fs::path dir(a.out);
    auto files = build_corpus(cfg, dir);
    const Vocabulary vocab(a.side);
    write_text(dir / "vocab.txt", vocab.dump());

    Manifest m("gen-data", *cmd);
    m["seeds"] = {{"data", a.seed}};
    m["vocab_hash"] = vocab.hash();
    for (const auto& p : {files.train, files.validation, files.test, dir / "vocab.txt"}) m.artifact(p);
    m.write(dir / "manifest.json");
    log_line("gen-data: wrote " + dir.string());
  });
}

// ---------------------------------------------------------------- sft

struct SftArgs {
  std::string data, order = "random", config, out;
  std::uint64_t seed = 0;
  double lr = 0;
  int batch_size = 0, max_steps = 0, eval_interval = 0, patience = 0, val_limit = 0;
  bool paper_scale = false;
};

struct SftOutcome {
  SftResult result;
  SftConfig config;
  ModelConfig model;
};

SftOutcome run_sft_with(const Corpus& corpus, const TokenCodec& codec, KvConfig kv, Order order,
                        bool paper_scale, std::uint64_t seed) {
  SftConfig cfg = SftConfig::from_kv(kv, order);
  cfg.seed = seed;
  if (paper_scale && !kv.contains("sft.batch_size") && !kv.contains("batch_size")) cfg.batch_size = 128;
  cfg.validate();
  const ModelConfig model = model_config_from(kv, codec, paper_scale, seed);
  auto progress = [](const SftMetricsRow& row) {
    char buf[160];
    if (row.loss) {
      std::snprintf(buf, sizeof(buf), "sft step %lld loss=%.5f", static_cast<long long>(row.step), *row.loss);
    } else {
      std::snprintf(buf, sizeof(buf), "sft step %lld val_cell_accuracy=%.4f",
                    static_cast<long long>(row.step), row.cell_accuracy.value_or(0.0));
    }
    log_line(buf);
  };
  return {train_sft(corpus.train, corpus.validation, model, cfg, codec, progress), cfg, model};
}

void register_sft(CLI::App& root, SftArgs& a) {
  auto* cmd = root.add_subcommand("sft", "Supervised fine-tuning");
  cmd->add_option("--data", a.data, "Corpus directory")->required();
  cmd->add_option("--order", a.order, "solver or random")->capture_default_str();
  cmd->add_option("--config", a.config, "key = value config file");
  cmd->add_option("--out", a.out, "Output checkpoint")->required();
  auto* seed = cmd->add_option("--seed", a.seed);
  auto* lr = cmd->add_option("--lr", a.lr);
  auto* bs = cmd->add_option("--batch-size", a.batch_size);
  auto* ms = cmd->add_option("--max-steps", a.max_steps);
  auto* ei = cmd->add_option("--eval-interval", a.eval_interval);
  auto* pa = cmd->add_option("--patience", a.patience);
  auto* vl = cmd->add_option("--val-limit", a.val_limit);
  cmd->add_flag("--paper-scale", a.paper_scale, "8 layers / 8 heads / 512 wide, batch 128");
  cmd->callback([&a, cmd, seed, lr, bs, ms, ei, pa, vl] {
    Manifest m("sft", *cmd);
    KvConfig kv = load_config(a.config);
    if (!a.config.empty()) m.input("config", a.config);
    override_key(kv, seed, "seed", a.seed);
    override_key(kv, lr, "sft.lr", a.lr);
    override_key(kv, bs, "sft.batch_size", a.batch_size);
    override_key(kv, ms, "sft.max_steps", a.max_steps);
    override_key(kv, ei, "sft.eval_interval", a.eval_interval);
    override_key(kv, pa, "sft.patience", a.patience);
    override_key(kv, vl, "sft.val_limit", a.val_limit);
    const Order order = parse_order(a.order);
    const auto run_seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));

    Corpus corpus = load_dir(a.data, m);
    const TokenCodec codec(corpus_side(corpus.train, a.data));
    auto outcome = run_sft_with(corpus, codec, kv, order, a.paper_scale, run_seed);

    const fs::path out(a.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    outcome.result.best.metadata["seed"] = std::to_string(run_seed);
    outcome.result.best.save(out);
    std::string metrics;
    for (const auto& row : outcome.result.log) metrics += row.to_json() + "\n";
    write_text(sibling(out, ".metrics.jsonl"), metrics);

    m["seeds"] = {{"run", run_seed}};
    m["config"] = kv_json(kv);
    m["sft"] = sft_json(outcome.config);
    m["model"] = model_json(outcome.model);
    m["result"] = {{"best_step", outcome.result.best_step},
                   {"best_val_cell_accuracy", outcome.result.best_val_accuracy},
                   {"steps_run", outcome.result.steps_run},
                   {"early_stopped", outcome.result.early_stopped}};
    m.artifact(out);
    m.artifact(sibling(out, ".metrics.jsonl"));
    m.write(sibling(out, ".manifest.json"));
    char buf[128];
    std::snprintf(buf, sizeof(buf), "sft: best val cell accuracy %.4f at step %lld",
                  outcome.result.best_val_accuracy, static_cast<long long>(outcome.result.best_step));
    log_line(buf);
  });
}

// ---------------------------------------------------------------- bootstrap-scales

struct BootstrapArgs {
  std::string ckpt, data, config, out;
  double alpha = 0.75, temperature = 1.0;
  std::uint64_t seed = 0;
  int max_new_tokens = 186;
};

BootstrapConfig bootstrap_from(const KvConfig& kv) {
  BootstrapConfig b;
  b.temperature = kv.get_double("bootstrap.temperature", kv.get_double("grpo.temperature", 1.0));
  // Defaults to the GRPO rollout seed.
  b.seed = static_cast<std::uint64_t>(
      kv.get_int("bootstrap.seed", kv.get_int("grpo.seed", kv.get_int("seed", 0))));
  b.max_new_tokens = static_cast<int>(kv.get_int("grpo.max_new_tokens", 186));
  return b;
}

void register_bootstrap(CLI::App& root, BootstrapArgs& a) {
  auto* cmd = root.add_subcommand("bootstrap-scales", "Calibrate frozen reward scales");
  cmd->add_option("--ckpt", a.ckpt, "Fine-tuned checkpoint")->required();
  cmd->add_option("--data", a.data, "Corpus directory")->required();
  cmd->add_option("--alpha", a.alpha, "Cell weight in [0, 1]")->required();
  cmd->add_option("--out", a.out, "Output scales JSON")->required();
  cmd->add_option("--config", a.config);
  auto* seed = cmd->add_option("--seed", a.seed);
  auto* temp = cmd->add_option("--temperature", a.temperature);
  auto* mnt = cmd->add_option("--max-new-tokens", a.max_new_tokens);
  cmd->callback([&a, cmd, seed, temp, mnt] {
    Manifest m("bootstrap-scales", *cmd);
    KvConfig kv = load_config(a.config);
    if (!a.config.empty()) m.input("config", a.config);
    override_key(kv, seed, "bootstrap.seed", a.seed);
    override_key(kv, temp, "bootstrap.temperature", a.temperature);
    override_key(kv, mnt, "grpo.max_new_tokens", a.max_new_tokens);
    const BootstrapConfig bc = bootstrap_from(kv);

    const auto ckpt = Checkpoint::load(a.ckpt);
    m.input("checkpoint", a.ckpt);
    const auto val = load_split(a.data, Split::kValidation);
    m.input("validation", split_path(a.data, Split::kValidation));
    const TokenCodec codec(corpus_side(val, a.data));
    require_vocab(ckpt, codec.vocab());
    const auto scales = bootstrap_scales(model_from_checkpoint(ckpt), ckpt.content_hash(), codec,
                                         val, a.alpha, bc);
    const fs::path out(a.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    scales.save(out);
    m["seeds"] = {{"bootstrap", bc.seed}};
    m["config"] = kv_json(kv);
    m.artifact(out);
    m.write(sibling(out, ".manifest.json"));
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "bootstrap: mean_cell=%.4f mean_order=%.4f cell_scale=%.6g order_scale=%.6g",
                  scales.mean_cell, scales.mean_order, scales.cell_scale, scales.order_scale);
    log_line(buf);
  });
}

// ---------------------------------------------------------------- grpo

struct GrpoArgs {
  std::string ckpt, scales, config, out, data;
  std::uint64_t seed = 0;
  int steps = 0, group_size = 0, batch_prompts = 0;
  double lr = 0;
};

GrpoConfig grpo_from(KvConfig kv, double alpha) {
  kv.set("grpo.alpha", [&] {
    std::ostringstream s;
    s.precision(17);
    s << alpha;
    return s.str();
  }());
  return GrpoConfig::from_kv(kv);
}

void grpo_progress(const GrpoMetricsRow& row) {
  char buf[240];
  if (row.step == 0) {
    std::snprintf(buf, sizeof(buf), "grpo step 0 val_cell_accuracy=%.4f", row.val_cell_accuracy.value_or(0.0));
  } else {
    std::snprintf(buf, sizeof(buf),
                  "grpo step %lld r_cell=%.4f r_order=%.4f r_total=%.4f kl=%.5f clip=%.3f%s",
                  static_cast<long long>(row.step), row.mean_r_cell, row.mean_r_order, row.mean_r_total,
                  row.mean_kl, row.clip_fraction,
                  row.val_cell_accuracy
                      ? (" val_cell_accuracy=" + std::to_string(*row.val_cell_accuracy)).c_str()
                      : "");
  }
  log_line(buf);
}

void register_grpo(CLI::App& root, GrpoArgs& a) {
  auto* cmd = root.add_subcommand("grpo", "GRPO post-training");
  cmd->add_option("--ckpt", a.ckpt, "Fine-tuned checkpoint")->required();
  cmd->add_option("--scales", a.scales, "Scales JSON from bootstrap-scales")->required();
  cmd->add_option("--config", a.config);
  cmd->add_option("--out", a.out, "Output checkpoint")->required();
  auto* data = cmd->add_option("--data", a.data, "Corpus directory (or `data` in the config)");
  auto* seed = cmd->add_option("--seed", a.seed);
  auto* steps = cmd->add_option("--steps", a.steps);
  auto* gs = cmd->add_option("--group-size", a.group_size);
  auto* bp = cmd->add_option("--batch-prompts", a.batch_prompts);
  auto* lr = cmd->add_option("--lr", a.lr);
  cmd->callback([&a, cmd, data, seed, steps, gs, bp, lr] {
    Manifest m("grpo", *cmd);
    KvConfig kv = load_config(a.config);
    if (!a.config.empty()) m.input("config", a.config);
    override_key(kv, data, "data", a.data);
    override_key(kv, seed, "grpo.seed", a.seed);
    override_key(kv, steps, "grpo.steps", a.steps);
    override_key(kv, gs, "grpo.group_size", a.group_size);
    override_key(kv, bp, "grpo.batch_prompts", a.batch_prompts);
    override_key(kv, lr, "grpo.lr", a.lr);
    const std::string dir = kv.get_string("data", "");
    if (dir.empty()) throw_input("grpo: no corpus given (--data or `data` in the config)");

    const auto scales = RewardScales::load(a.scales);
    m.input("scales", a.scales);
    const auto ckpt = Checkpoint::load(a.ckpt);
    m.input("checkpoint", a.ckpt);
    Corpus corpus = load_dir(dir, m);
    const TokenCodec codec(corpus_side(corpus.train, dir));
    const GrpoConfig cfg = grpo_from(kv, scales.alpha);

    auto result = run_grpo(ckpt, scales, corpus.train, corpus.validation, cfg, codec, grpo_progress);
    const fs::path out(a.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    result.final_checkpoint.save(out);
    result.best_checkpoint.save(sibling(out, ".best"));
    std::string metrics;
    for (const auto& row : result.log) metrics += row.to_json() + "\n";
    write_text(sibling(out, ".metrics.jsonl"), metrics);

    m["seeds"] = {{"rollout", cfg.seed}};
    m["config"] = kv_json(kv);
    m["grpo"] = grpo_json(cfg);
    m["result"] = {{"best_step", result.best_step}, {"best_val_cell_accuracy", result.best_val_accuracy}};
    m.artifact(out);
    m.artifact(sibling(out, ".best"));
    m.artifact(sibling(out, ".metrics.jsonl"));
    m.write(sibling(out, ".manifest.json"));
    log_line("grpo: wrote " + out.string());
  });
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string ckpt, data, split = "test", out;
  int max_new_tokens = 186;
};

void register_eval(CLI::App& root, EvalArgs& a) {
  auto* cmd = root.add_subcommand("eval", "Greedy-decoding evaluation");
  cmd->add_option("--ckpt", a.ckpt)->required();
  cmd->add_option("--data", a.data)->required();
  cmd->add_option("--split", a.split)->capture_default_str();
  cmd->add_option("--out", a.out, "Report JSON")->required();
  cmd->add_option("--max-new-tokens", a.max_new_tokens)->capture_default_str();
  cmd->callback([&a, cmd] {
    Manifest m("eval", *cmd);
    const Split split = parse_split(a.split);
    const auto records = load_split(a.data, split);
    m.input(std::string(split_name(split)), split_path(a.data, split));
    const auto ckpt = Checkpoint::load(a.ckpt);
    m.input("checkpoint", a.ckpt);
    const TokenCodec codec(corpus_side(records, a.data));
    const auto report = evaluate_checkpoint(ckpt, codec, records, a.max_new_tokens);
    const fs::path out(a.out);
    write_text(out, report.to_json());
    m.artifact(out);
    m.write(sibling(out, ".manifest.json"));
    std::cout << report.summary() << std::endl;
  });
}

// ---------------------------------------------------------------- sweep

struct SweepArgs {
  std::string ckpt, solver_ckpt, data, config, out, alphas = "0,0.25,0.5,0.75,1";
  std::uint64_t seed = 0;
  int steps = 0;
  bool paper_scale = false;
};

std::vector<double> parse_alphas(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw_input("sweep: cannot parse alpha '" + item + "'");
    }
  }
  if (out.empty()) throw_input("sweep: no alpha values given");
  return out;
}

void register_sweep(CLI::App& root, SweepArgs& a) {
  auto* cmd = root.add_subcommand("sweep", "Mixture sweep over alpha");
  cmd->add_option("--ckpt", a.ckpt, "Random-order fine-tuned checkpoint")->required();
  cmd->add_option("--solver-ckpt", a.solver_ckpt,
                  "Solver-order fine-tuned checkpoint (trained here if omitted)");
  cmd->add_option("--data", a.data)->required();
  cmd->add_option("--alphas", a.alphas)->capture_default_str();
  cmd->add_option("--config", a.config);
  cmd->add_option("--out", a.out, "Report directory")->required();
  auto* seed = cmd->add_option("--seed", a.seed);
  auto* steps = cmd->add_option("--steps", a.steps);
  cmd->add_flag("--paper-scale", a.paper_scale, "Model size for a solver-order baseline trained here");
  cmd->callback([&a, cmd, seed, steps] {
    Manifest m("sweep", *cmd);
    KvConfig kv = load_config(a.config);
    if (!a.config.empty()) m.input("config", a.config);
    override_key(kv, seed, "grpo.seed", a.seed);
    override_key(kv, seed, "seed", a.seed);
    override_key(kv, steps, "grpo.steps", a.steps);
    const auto alphas = parse_alphas(a.alphas);

    const fs::path dir(a.out);
    fs::create_directories(dir);
    Corpus corpus = load_dir(a.data, m, true);
    const TokenCodec codec(corpus_side(corpus.train, a.data));
    const auto random_ckpt = Checkpoint::load(a.ckpt);
    m.input("checkpoint", a.ckpt);

    Checkpoint solver_ckpt;
    if (!a.solver_ckpt.empty()) {
      solver_ckpt = Checkpoint::load(a.solver_ckpt);
      m.input("solver_checkpoint", a.solver_ckpt);
    } else {
      log_line("sweep: training the solver-order baseline");
      const auto run_seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
      auto outcome = run_sft_with(corpus, codec, kv, Order::kSolver, a.paper_scale, run_seed);
      solver_ckpt = outcome.result.best;
      solver_ckpt.metadata["seed"] = std::to_string(run_seed);
      solver_ckpt.save(dir / "solver_sft.ckpt");
      m.artifact(dir / "solver_sft.ckpt");
      m["solver_sft"] = sft_json(outcome.config);
    }

    const GrpoConfig cfg = grpo_from(kv, alphas.front());
    const BootstrapConfig bc = bootstrap_from(kv);
    auto hook = [&](double alpha, const RewardScales& scales, const GrpoResult& run, const EvalReport& eval) {
      char tag[32];
      std::snprintf(tag, sizeof(tag), "alpha_%g", alpha);
      scales.save(dir / (std::string(tag) + ".scales.json"));
      std::string metrics;
      for (const auto& row : run.log) metrics += row.to_json() + "\n";
      write_text(dir / (std::string(tag) + ".metrics.jsonl"), metrics);
      write_text(dir / (std::string(tag) + ".eval.json"), eval.to_json());
      for (const char* ext : {".scales.json", ".metrics.jsonl", ".eval.json"}) m.artifact(dir / (std::string(tag) + ext));
      log_line("sweep: alpha=" + std::string(tag + 6) + " test " + eval.summary());
    };
    const auto report = sweep_alpha(random_ckpt, solver_ckpt, corpus.train, corpus.validation,
                                    corpus.test, alphas, cfg, bc, codec, hook);
    write_text(dir / "report.txt", report.to_table());
    write_text(dir / "report.json", report.to_json());
    m["seeds"] = {{"rollout", cfg.seed}, {"bootstrap", bc.seed}};
    m["config"] = kv_json(kv);
    m["grpo"] = grpo_json(cfg);
    m.artifact(dir / "report.txt");
    m.artifact(dir / "report.json");
    m.write(dir / "manifest.json");
    std::cout << report.to_table();
  });
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Sudoku GRPO lab: data, fine-tuning, reward calibration, GRPO, evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  GenDataArgs gen;
  SftArgs sft;
  BootstrapArgs boot;
  GrpoArgs grpo;
  EvalArgs eval;
  SweepArgs sweep;
  register_gen_data(app, gen);
  register_sft(app, sft);
  register_bootstrap(app, boot);
  register_grpo(app, grpo);
  register_eval(app, eval);
  register_sweep(app, sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[input]: " << e.what() << std::endl;
    return exit_code_for(ErrorKind::kInput);
  } catch (const Error& e) {
    std::cerr << "error[" << error_kind_name(e.kind()) << "]: " << e.what() << std::endl;
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error[io]: " << e.what() << std::endl;
    return exit_code_for(ErrorKind::kIo);
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}

}  // namespace sgrpo::cli

int main(int argc, char** argv) { return sgrpo::cli::run(argc, argv); }
