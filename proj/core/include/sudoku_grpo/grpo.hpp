#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sudoku_grpo/adamw.hpp"
#include "sudoku_grpo/checkpoint.hpp"
#include "sudoku_grpo/dataset.hpp"
#include "sudoku_grpo/eval.hpp"
#include "sudoku_grpo/kv_config.hpp"
#include "sudoku_grpo/model.hpp"
#include "sudoku_grpo/reward.hpp"
#include "sudoku_grpo/token_codec.hpp"

namespace sgrpo {

inline constexpr double kAdvantageEpsilon = 1e-8;

struct GrpoConfig {
  int group_size = 8;
  double lr = 1e-5;
  double kl_beta = 0.01;
  double clip_eps = 0.2;
  int max_new_tokens = 186;
  int batch_prompts = 4;
  int steps = 300;
  double alpha = 0.75;
  double temperature = 1.0;
  double weight_decay = 0.01;
  int eval_interval = 25;
  int val_limit = 64;  // 0 = whole validation split
  std::uint64_t seed = 0;

  void validate() const;
  // Applies `grpo.*` keys (and bare keys) from a config file.
  static GrpoConfig from_kv(const KvConfig& kv);
};

struct Rollout {
  std::vector<TokenId> completion;
  std::vector<double> behavior_log_probs;  // one per completion token
  Trajectory decoded;
  RewardBreakdown reward;
  double advantage = 0.0;
};

struct RolloutGroup {
  std::string prompt_id;
  std::vector<TokenId> prompt;
  std::vector<Rollout> rollouts;
};

// a_i = (r_i - mean) / (population std + 1e-8); all zero when every reward
// is identical.
std::vector<double> compute_advantages(std::span<const double> rewards);

// Fills each rollout's advantage from its reward.r_total.
void assign_advantages(RolloutGroup& group);

// G stochastic completions of the record's prompt, decoded and scored with
// the frozen scales. Deterministic in (config.seed, prompt id, step, index).
RolloutGroup generate_group(const Transformer<float>& policy, const PuzzleRecord& record,
                            const TokenCodec& codec, const RewardScales& scales,
                            const GrpoConfig& config, std::uint64_t step = 0);

// Per-token pieces of the clipped objective with the k3 KL estimator:
//   loss = -min(rho*a, clip(rho, 1-eps, 1+eps)*a) + beta*(exp(ref-cur) - (ref-cur) - 1)
struct GrpoTokenTerms {
  double loss = 0.0;
  double ratio = 1.0;
  double kl = 0.0;
  bool clipped = false;
  double dloss_dlogp = 0.0;  // derivative with respect to the current log-prob
};

GrpoTokenTerms grpo_token_terms(double logp_current, double logp_behavior, double logp_reference,
                                double advantage, double clip_eps, double kl_beta);

// Non-negative for every argument; zero iff logp_reference == logp_current.
double kl_estimate(double logp_current, double logp_reference);

struct GrpoStepStats {
  double loss = 0.0;
  double mean_kl = 0.0;
  double clip_fraction = 0.0;
  double max_ratio_deviation = 0.0;  // max |rho - 1|
  int n_tokens = 0;
  int n_rollouts = 0;
};

struct GrpoGradients {
  GrpoStepStats stats;
  AlignedVector<float> grads;
};

// Objective averaged over each rollout's completion tokens, then over rollouts.
GrpoGradients grpo_loss_and_grads(const Transformer<float>& policy,
                                  const Transformer<float>& reference,
                                  std::span<const RolloutGroup> groups, const GrpoConfig& config);

// grpo_loss_and_grads followed by one AdamW step. Numerical error on NaN.
GrpoStepStats grpo_step(Transformer<float>& policy, AdamW<float>& optimizer,
                        const Transformer<float>& reference, std::span<const RolloutGroup> groups,
                        const GrpoConfig& config);

// Prompt + completion with the loss mask on the completion tokens.
TokenSequence rollout_sequence(const RolloutGroup& group, const Rollout& rollout);

struct GrpoMetricsRow {
  std::int64_t step = 0;
  double alpha = 0.0;
  double mean_r_cell = 0.0;
  double mean_r_order = 0.0;
  double mean_r_total = 0.0;
  double mean_normalized_order = 0.0;
  double cell_contribution = 0.0;   // cell_scale * mean_r_cell
  double order_contribution = 0.0;  // order_scale * mean_r_order
  double mean_kl = 0.0;
  double clip_fraction = 0.0;
  double loss = 0.0;
  double mean_completion_tokens = 0.0;
  std::optional<double> val_cell_accuracy;

  std::string to_json() const;
};

struct GrpoResult {
  Checkpoint final_checkpoint;
  Checkpoint best_checkpoint;
  std::vector<GrpoMetricsRow> log;
  double best_val_accuracy = 0.0;
  std::int64_t best_step = 0;
};

using GrpoProgress = std::function<void(const GrpoMetricsRow&)>;

// Post-trains `sft` against the frozen `scales`. Refuses (provenance error)
// when the scales were calibrated on a different checkpoint. The policy's
// starting parameters double as the frozen KL reference.
GrpoResult run_grpo(const Checkpoint& sft, const RewardScales& scales,
                    std::span<const PuzzleRecord> train, std::span<const PuzzleRecord> validation,
                    const GrpoConfig& config, const TokenCodec& codec,
                    const GrpoProgress& progress = {});

struct SweepRow {
  std::string label;
  std::optional<double> alpha;  // empty for the fine-tuned baselines
  double cell_accuracy = 0.0;
};

struct SweepReport {
  std::vector<SweepRow> rows;

  std::string to_table() const;
  std::string to_json() const;
};

// Called once per alpha after its run and test evaluation.
using SweepHook = std::function<void(double alpha, const RewardScales&, const GrpoResult&,
                                     const EvalReport&)>;

// One calibration + GRPO run per alpha from the same random-order checkpoint
// and seed, plus both fine-tuned baselines; test cell accuracy per row.
SweepReport sweep_alpha(const Checkpoint& random_sft, const Checkpoint& solver_sft,
                        std::span<const PuzzleRecord> train,
                        std::span<const PuzzleRecord> validation,
                        std::span<const PuzzleRecord> test, std::span<const double> alphas,
                        const GrpoConfig& config, const BootstrapConfig& bootstrap,
                        const TokenCodec& codec, const SweepHook& hook = {});

std::string mixture_label(double alpha);

}  // namespace sgrpo
