#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sudoku_grpo/checkpoint.hpp"
#include "sudoku_grpo/dataset.hpp"
#include "sudoku_grpo/kv_config.hpp"
#include "sudoku_grpo/model.hpp"
#include "sudoku_grpo/token_codec.hpp"

namespace sgrpo {

struct SftConfig {
  Order order = Order::kRandom;
  double lr = 5e-5;
  int batch_size = 32;
  double weight_decay = 0.01;
  int patience = 10;
  int max_steps = 20000;
  int eval_interval = 200;
  int log_interval = 50;
  int val_limit = 0;  // 0 = whole validation split
  int max_new_tokens = 186;
  std::uint64_t seed = 0;

  void validate() const;

  // lr 1e-5 for solver order, 5e-5 for random order.
  static SftConfig defaults_for(Order order);
  // Applies `sft.*` keys (and bare keys for backwards compatibility) from a config file.
  static SftConfig from_kv(const KvConfig& kv, Order order);
};

struct SftMetricsRow {
  std::int64_t step = 0;
  std::string split;  // "train" or "validation"
  std::optional<double> loss;
  std::optional<double> cell_accuracy;

  std::string to_json() const;
};

struct SftResult {
  Checkpoint best;
  std::vector<SftMetricsRow> log;
  double best_val_accuracy = 0.0;
  std::int64_t best_step = 0;
  std::int64_t steps_run = 0;
  bool early_stopped = false;
  int evaluations = 0;
};

using SftProgress = std::function<void(const SftMetricsRow&)>;

// Masked causal-LM training with greedy-decoding validation every
// eval_interval steps (plus step 0). Stops after `patience` consecutive
// evaluations without a strictly higher validation cell accuracy and
// returns the best checkpoint.
SftResult train_sft(std::span<const PuzzleRecord> train, std::span<const PuzzleRecord> validation,
                    const ModelConfig& model_config, const SftConfig& config,
                    const TokenCodec& codec, const SftProgress& progress = {});

}  // namespace sgrpo
