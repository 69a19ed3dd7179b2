#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sudoku_grpo/grpo.hpp"
#include "sudoku_grpo/rng.hpp"
#include "sudoku_grpo/sampling.hpp"

namespace sgrpo::testing {

// Two-armed softmax bandit expressed as a one-token completion of a tiny
// Transformer. The final LayerNorm has zero gain and a one-hot bias, so the
// head's first row holds the arm logits; every other token gets -30.
struct Bandit {
  static constexpr TokenId kArmA = Vocabulary::kFirstDigit + 1;
  static constexpr TokenId kArmB = Vocabulary::kFirstDigit + 2;

  Transformer<float> policy;
  std::vector<TokenId> prompt{Vocabulary::kBos, Vocabulary::kSep};

  Bandit() : policy(config()) {
    policy.init_weights(1);
    const auto& layout = policy.layout();
    const int d = policy.config().d_model;
    const int v = policy.config().vocab_size;
    auto& p = policy.params();
    for (int i = 0; i < d; ++i) {
      p[layout.lnf_g() + static_cast<std::size_t>(i)] = 0.0f;
      p[layout.lnf_b() + static_cast<std::size_t>(i)] = i == 0 ? 1.0f : 0.0f;
    }
    for (int i = 0; i < d; ++i)
      for (int t = 0; t < v; ++t) {
        const bool arm = t == kArmA || t == kArmB;
        p[layout.head() + static_cast<std::size_t>(i) * v + static_cast<std::size_t>(t)] =
            (i == 0 && !arm) ? -30.0f : 0.0f;
      }
  }

  static ModelConfig config() {
    ModelConfig c;
    c.n_layers = 1;
    c.n_heads = 1;
    c.d_model = 8;
    c.vocab_size = 9;
    c.max_seq_len = 4;
    return c;
  }

  double prob_a() const {
    auto logits = policy.forward(prompt);
    const int last = static_cast<int>(logits.rows()) - 1;
    std::vector<float> row(logits.row(last).data(), logits.row(last).data() + logits.cols());
    return std::exp(static_cast<double>(log_softmax<float>(row)[kArmA]));
  }

  // G sampled pulls; reward 1 for arm A, 0 otherwise.
  RolloutGroup pull(int group_size, std::uint64_t seed, std::uint64_t step) const {
    RolloutGroup g;
    g.prompt_id = "bandit";
    g.prompt = prompt;
    for (int i = 0; i < group_size; ++i) {
      auto c = sample_completion<float>(
          policy, prompt,
          SamplingMode::categorical(1.0, derive_seed(seed, "bandit", step, static_cast<std::uint64_t>(i))),
          1);
      Rollout r;
      r.completion = c.ids;
      r.behavior_log_probs = c.log_probs;
      r.reward.r_cell = c.ids[0] == kArmA ? 1.0 : 0.0;
      r.reward.r_total = r.reward.r_cell;
      g.rollouts.push_back(std::move(r));
    }
    assign_advantages(g);
    return g;
  }
};

struct BanditTrace {
  double initial_prob = 0.0;
  double final_prob = 0.0;
  double max_abs_advantage_mean = 0.0;
  bool reference_unchanged = true;
};

inline BanditTrace run_bandit(int steps, int group_size, double lr, std::uint64_t seed) {
  Bandit bandit;
  const Transformer<float> reference = bandit.policy;
  const auto reference_params = reference.params();
  GrpoConfig cfg;
  cfg.group_size = group_size;
  cfg.kl_beta = 0.0;
  cfg.lr = lr;
  cfg.weight_decay = 0.0;
  AdamW<float> opt(bandit.policy.num_params(), AdamWHyper{lr, 0.0, 0.9, 0.999, 1e-8});
  BanditTrace trace;
  trace.initial_prob = bandit.prob_a();
  for (int s = 0; s < steps; ++s) {
    std::vector<RolloutGroup> groups{bandit.pull(group_size, seed, static_cast<std::uint64_t>(s))};
    double mean = 0.0;
    for (const auto& r : groups[0].rollouts) mean += r.advantage;
    mean /= static_cast<double>(group_size);
    trace.max_abs_advantage_mean = std::max(trace.max_abs_advantage_mean, std::abs(mean));
    grpo_step(bandit.policy, opt, reference, groups, cfg);
  }
  trace.final_prob = bandit.prob_a();
  trace.reference_unchanged = reference.params() == reference_params;
  return trace;
}

}  // namespace sgrpo::testing
