#include "sudoku_grpo/dataset.hpp"

#include <algorithm>
#include <unordered_set>

#include <json.hpp>

#include "sudoku_grpo/error.hpp"
#include "sudoku_grpo/hash.hpp"
#include "sudoku_grpo/rng.hpp"

namespace sgrpo {
namespace {

using nlohmann::json;

json flatten(const Trajectory& moves) {
  json arr = json::array();
  for (const Move& m : moves) {
    arr.push_back(m.row);
    arr.push_back(m.col);
    arr.push_back(m.val);
  }
  return arr;
}

Trajectory unflatten(const json& arr, const char* field) {
  if (!arr.is_array() || arr.size() % 3 != 0) {
    throw_input(std::string(field) + " must be a flat integer list of length divisible by 3");
  }
  Trajectory out;
  out.reserve(arr.size() / 3);
  for (std::size_t i = 0; i < arr.size(); i += 3) {
    out.push_back({arr[i].get<int>(), arr[i + 1].get<int>(), arr[i + 2].get<int>()});
  }
  return out;
}

void write_split(const std::filesystem::path& path, const std::vector<PuzzleRecord>& records,
                 Split split) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  for (const auto& r : records) {
    if (r.split == split) out << record_to_json_line(r) << '\n';
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

}  // namespace

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation" || name == "val") return Split::kValidation;
  if (name == "test") return Split::kTest;
  throw_input("unknown split '" + std::string(name) + "'");
}

void validate_record(const PuzzleRecord& record) {
  auto a = record.solver_order;
  auto b = record.random_order;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a != b) throw_input("record " + record.id + ": orders hold different moves");
  for (const Trajectory* t : {&record.solver_order, &record.random_order}) {
    Grid done = apply_trajectory(record.puzzle, *t);
    if (!done.is_complete()) throw_input("record " + record.id + ": trajectory leaves blanks");
  }
}

std::string record_to_json_line(const PuzzleRecord& record) {
  json j;
  j["id"] = record.id;
  j["side"] = record.puzzle.side();
  j["givens"] = record.puzzle.to_string();
  j["solver_order"] = flatten(record.solver_order);
  j["random_order"] = flatten(record.random_order);
  j["split"] = std::string(split_name(record.split));
  return j.dump();
}

PuzzleRecord record_from_json_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw_input(std::string("invalid JSON: ") + e.what());
  }
  try {
    PuzzleRecord r{
        j.at("id").get<std::string>(),
        Grid::from_string(j.at("givens").get<std::string>(), j.at("side").get<int>()),
        unflatten(j.at("solver_order"), "solver_order"),
        unflatten(j.at("random_order"), "random_order"),
        parse_split(j.at("split").get<std::string>()),
    };
    return r;
  } catch (const json::exception& e) {
    throw_input(std::string("bad record field: ") + e.what());
  }
}

std::filesystem::path split_path(const std::filesystem::path& dir, Split split) {
  return dir / (std::string(split_name(split)) + ".jsonl");
}

std::vector<PuzzleRecord> generate_corpus(const CorpusConfig& config) {
  if (config.n_train < 0 || config.n_val < 0 || config.n_test < 0) {
    throw_input("corpus split sizes must be non-negative");
  }
  if (config.givens_min > config.givens_max || config.givens_min < 0) {
    throw_input("givens range is empty");
  }
  const std::pair<Split, int> plan[] = {{Split::kTrain, config.n_train},
                                        {Split::kValidation, config.n_val},
                                        {Split::kTest, config.n_test}};
  std::vector<PuzzleRecord> records;
  std::unordered_set<std::string> seen;
  std::uint64_t index = 0;
  for (auto [split, count] : plan) {
    for (int i = 0; i < count; ++i, ++index) {
      // Retry with a fresh stream until the encoding is new to the corpus.
      for (std::uint64_t attempt = 0;; ++attempt) {
        Rng rng = make_rng(config.seed, "corpus.givens", index, attempt);
        const int span = config.givens_max - config.givens_min + 1;
        const int givens =
            config.givens_min + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(span)));
        auto gen = generate_puzzle(derive_seed(config.seed, "corpus.puzzle", index, attempt),
                                   givens, config.side);
        std::string key = gen.puzzle.to_string();
        if (!seen.insert(key).second) continue;
        PuzzleRecord rec{
            std::string(split_name(split)) + "-" + std::to_string(i),
            gen.puzzle,
            gen.solver_order,
            shuffle_trajectory(gen.solver_order, derive_seed(config.seed, "corpus.shuffle", index)),
            split,
        };
        records.push_back(std::move(rec));
        break;
      }
    }
  }
  return records;
}

CorpusFiles build_corpus(const CorpusConfig& config, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
  auto records = generate_corpus(config);
  CorpusFiles files{split_path(dir, Split::kTrain), split_path(dir, Split::kValidation),
                    split_path(dir, Split::kTest)};
  write_split(files.train, records, Split::kTrain);
  write_split(files.validation, records, Split::kValidation);
  write_split(files.test, records, Split::kTest);
  return files;
}

CorpusReader::CorpusReader(const std::filesystem::path& path) : path_(path), in_(path) {
  if (!in_) throw Error(ErrorKind::kIo, "cannot open corpus " + path.string());
}

std::optional<PuzzleRecord> CorpusReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (line.empty()) continue;
    try {
      PuzzleRecord rec = record_from_json_line(line);
      validate_record(rec);
      return rec;
    } catch (const Error& e) {
      throw Error(ErrorKind::kInput,
                  path_.string() + ":" + std::to_string(line_no_) + ": " + e.what());
    }
  }
  return std::nullopt;
}

std::vector<PuzzleRecord> load_corpus(const std::filesystem::path& path) {
  CorpusReader reader(path);
  std::vector<PuzzleRecord> out;
  while (auto rec = reader.next()) out.push_back(std::move(*rec));
  return out;
}

std::vector<PuzzleRecord> load_split(const std::filesystem::path& dir, Split split) {
  return load_corpus(split_path(dir, split));
}

std::string corpus_hash(const std::vector<PuzzleRecord>& records) {
  std::string all;
  for (const auto& r : records) {
    all += record_to_json_line(r);
    all += '\n';
  }
  return sha256_hex(all);
}

}  // namespace sgrpo
