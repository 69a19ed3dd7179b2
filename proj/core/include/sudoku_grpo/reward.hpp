#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sudoku_grpo/dataset.hpp"
#include "sudoku_grpo/model.hpp"
#include "sudoku_grpo/sudoku.hpp"
#include "sudoku_grpo/token_codec.hpp"

namespace sgrpo {

inline constexpr double kScaleEpsilon = 1e-8;

struct RewardBreakdown {
  double r_cell = 0.0;   // n_correct / |solution|
  double r_order = 0.0;  // in [0, n_correct]
  double r_total = 0.0;
  int n_correct = 0;
  int n_solution = 0;

  double normalized_order() const {
    return n_solution > 0 ? r_order / static_cast<double>(n_solution) : 0.0;
  }
};

// Frozen mixture scales. cell_scale * mean_cell = alpha and
// order_scale * mean_order = 1 - alpha unless a mean hit the epsilon clamp.
struct RewardScales {
  double alpha = 1.0;
  double cell_scale = 1.0;
  double order_scale = 0.0;
  double mean_cell = 0.0;
  double mean_order = 0.0;
  int n_samples = 0;
  std::uint64_t sample_seed = 0;
  double temperature = 1.0;
  std::string checkpoint_hash;
  std::string validation_hash;

  std::string to_json() const;
  static RewardScales from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static RewardScales load(const std::filesystem::path& path);

  friend bool operator==(const RewardScales&, const RewardScales&) = default;
};

struct CellAccuracy {
  double r_cell = 0.0;
  int n_correct = 0;
};

// |solution ∩ predicted| / |solution| with exact (row, col, val) membership.
// Order-insensitive; a repeated cell in `predicted` counts once (first wins).
// Throws an input error for an empty solution.
CellAccuracy cell_accuracy(const Trajectory& solution, const Trajectory& predicted);

// Sum over correct predicted moves of 1 / (1 + |solver index - emitted index|).
// Emitted indices count first occurrences of each cell only.
double order_reward(const Trajectory& solver, const Trajectory& predicted);

double total_reward(double r_cell, double r_order, const RewardScales& scales);

// All three components for one decoded rollout.
RewardBreakdown score_prediction(const Trajectory& solver, const Trajectory& predicted,
                                 const RewardScales& scales);

struct BootstrapConfig {
  double temperature = 1.0;
  std::uint64_t seed = 0;
  int max_new_tokens = 186;
};

struct BootstrapMeans {
  double mean_cell = 0.0;
  double mean_order = 0.0;
  int n_samples = 0;
};

// One sampled completion per record from the frozen policy; means of r_cell
// and r_order over the records.
BootstrapMeans measure_bootstrap_means(const Transformer<float>& policy, const TokenCodec& codec,
                                       std::span<const PuzzleRecord> records,
                                       const BootstrapConfig& config);

// cell_scale = alpha / max(mean_cell, eps); order_scale = (1 - alpha) / max(mean_order, eps).
RewardScales scales_from_means(double alpha, const BootstrapMeans& means);

// Measures means on `validation` and stamps the provenance hashes.
RewardScales bootstrap_scales(const Transformer<float>& policy, const std::string& checkpoint_hash,
                              const TokenCodec& codec, std::span<const PuzzleRecord> validation,
                              double alpha, const BootstrapConfig& config);

// Generation budget for a prompt: min(requested, context left after the prompt).
int generation_budget(const TokenCodec& codec, int prompt_len, int requested);

}  // namespace sgrpo
