#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sudoku_grpo/checkpoint.hpp"
#include "sudoku_grpo/dataset.hpp"
#include "sudoku_grpo/model.hpp"
#include "sudoku_grpo/token_codec.hpp"

namespace sgrpo {

struct RecordScore {
  std::string id;
  double r_cell = 0.0;
  double r_order = 0.0;
  double normalized_order = 0.0;
  int n_correct = 0;
  int n_solution = 0;
};

struct EvalReport {
  std::string split;
  int n_records = 0;
  double cell_accuracy = 0.0;        // mean of per-record r_cell
  double micro_cell_accuracy = 0.0;  // pooled correct / pooled blanks
  double full_solve_rate = 0.0;      // fraction of records with r_cell == 1
  double mean_order_reward = 0.0;
  double mean_normalized_order = 0.0;
  std::vector<RecordScore> records;

  std::string to_json() const;
  std::string summary() const;
};

// Maps a prompt to generated token ids (everything after SEP).
using CompletionPolicy =
    std::function<std::vector<TokenId>(const PuzzleRecord&, std::span<const TokenId>)>;

EvalReport evaluate_policy(std::span<const PuzzleRecord> records, const TokenCodec& codec,
                           const CompletionPolicy& policy);

// Greedy decoding with at most max_new_tokens per record.
EvalReport evaluate(const Transformer<float>& model, const TokenCodec& codec,
                    std::span<const PuzzleRecord> records, int max_new_tokens);

// As evaluate(), refusing checkpoints built for another vocabulary.
EvalReport evaluate_checkpoint(const Checkpoint& ckpt, const TokenCodec& codec,
                               std::span<const PuzzleRecord> records, int max_new_tokens);

}  // namespace sgrpo
