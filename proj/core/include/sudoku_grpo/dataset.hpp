#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sudoku_grpo/sudoku.hpp"

namespace sgrpo {

enum class Split { kTrain, kValidation, kTest };

std::string_view split_name(Split split);
Split parse_split(std::string_view name);

struct PuzzleRecord {
  std::string id;
  Grid puzzle;
  Trajectory solver_order;
  Trajectory random_order;
  Split split = Split::kTrain;

  friend bool operator==(const PuzzleRecord&, const PuzzleRecord&) = default;
};

// Throws an input error unless both orders hold the same moves and each
// replays onto the puzzle to a complete valid grid.
void validate_record(const PuzzleRecord& record);

// One JSON object per line: id, side, givens, solver_order, random_order,
// split. Orders are flat [r, c, v, ...] lists with 0-based indices.
std::string record_to_json_line(const PuzzleRecord& record);
PuzzleRecord record_from_json_line(std::string_view line);

struct CorpusConfig {
  int n_train = 2000;
  int n_val = 512;
  int n_test = 512;
  int givens_min = 30;
  int givens_max = 36;
  int side = 9;
  std::uint64_t seed = 0;
};

struct CorpusFiles {
  std::filesystem::path train;
  std::filesystem::path validation;
  std::filesystem::path test;
};

std::filesystem::path split_path(const std::filesystem::path& dir, Split split);

// Generates all splits in memory. Puzzle encodings are unique across the
// whole corpus, so splits are disjoint.
std::vector<PuzzleRecord> generate_corpus(const CorpusConfig& config);

// Generates and writes train.jsonl / validation.jsonl / test.jsonl under dir.
CorpusFiles build_corpus(const CorpusConfig& config, const std::filesystem::path& dir);

// Streams records in file order. Malformed lines raise an input error
// that names the file and line number.
class CorpusReader {
 public:
  explicit CorpusReader(const std::filesystem::path& path);

  std::optional<PuzzleRecord> next();
  int line_number() const { return line_no_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  int line_no_ = 0;
};

std::vector<PuzzleRecord> load_corpus(const std::filesystem::path& path);
std::vector<PuzzleRecord> load_split(const std::filesystem::path& dir, Split split);

// Stable digest over the records' canonical JSON lines.
std::string corpus_hash(const std::vector<PuzzleRecord>& records);

}  // namespace sgrpo
