#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "common/bandit.hpp"
#include "sudoku_grpo/error.hpp"
#include "sudoku_grpo/grpo.hpp"
#include "sudoku_grpo/sft.hpp"
#include "unit/test_util.hpp"

namespace sgrpo {
namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.n_layers = 1;
  cfg.n_heads = 2;
  cfg.d_model = 16;
  cfg.vocab_size = 9;
  cfg.max_seq_len = 51;
  cfg.seed = 3;
  return cfg;
}

Transformer<float> tiny_policy() {
  Transformer<float> m(tiny_config());
  m.init_weights(3);
  for (auto& p : m.params()) p *= 10.0f;
  return m;
}

GrpoConfig small_grpo() {
  GrpoConfig cfg;
  cfg.group_size = 4;
  cfg.batch_prompts = 2;
  cfg.steps = 3;
  cfg.lr = 1e-3;
  cfg.eval_interval = 2;
  cfg.val_limit = 2;
  cfg.seed = 5;
  return cfg;
}

TEST(ComputeAdvantages, EqualRewardsGiveZero) {
  std::vector<double> r{1, 1, 1, 1};
  for (double a : compute_advantages(r)) EXPECT_EQ(a, 0.0);
}

TEST(ComputeAdvantages, TwoRewards) {
  std::vector<double> r{0, 2};
  auto a = compute_advantages(r);
  // mean 1, population std 1
  EXPECT_NEAR(a[0], -1.0, 1e-7);
  EXPECT_NEAR(a[1], 1.0, 1e-7);
  EXPECT_DOUBLE_EQ(a[1], 1.0 / (1.0 + kAdvantageEpsilon));
}

TEST(ComputeAdvantages, CenteredForAnyInput) {
  Rng rng = make_rng(1, "test.adv");
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> r(2 + uniform_below(rng, 15));
    for (auto& x : r) x = uniform01(rng) < 0.3 ? 0.0 : 10 * standard_normal(rng);
    auto a = compute_advantages(r);
    EXPECT_LE(std::abs(std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size())), 1e-9);
  }
  std::vector<double> one{1.0};
  EXPECT_THROW(compute_advantages(one), Error);
}

TEST(GrpoTokenTerms, IdentityPolicy) {
  for (double lp : {-0.1, -2.0, -7.5}) {
    auto t = grpo_token_terms(lp, lp, lp, 0.7, 0.2, 0.01);
    EXPECT_EQ(t.ratio, 1.0);
    EXPECT_EQ(t.kl, 0.0);
    EXPECT_FALSE(t.clipped);
    EXPECT_EQ(t.loss, -0.7);
  }
}

TEST(GrpoTokenTerms, KlEstimatorNonNegative) {
  for (double cur = -12; cur <= 0; cur += 0.37)
    for (double ref = -12; ref <= 0; ref += 0.41) {
      const double k = kl_estimate(cur, ref);
      EXPECT_GE(k, 0.0);
      if (cur != ref) EXPECT_GT(k, 0.0);
    }
  EXPECT_EQ(kl_estimate(-3.0, -3.0), 0.0);
  EXPECT_GT(kl_estimate(-3.0, -3.0 + 1e-9), 0.0);
}

TEST(GrpoTokenTerms, ClippingRemovesPolicyGradient) {
  auto up = grpo_token_terms(std::log(1.5), 0.0, std::log(1.5), 1.0, 0.2, 0.0);
  EXPECT_TRUE(up.clipped);
  EXPECT_NEAR(up.loss, -1.2, 1e-12);
  EXPECT_EQ(up.dloss_dlogp, 0.0);
  auto down = grpo_token_terms(std::log(0.5), 0.0, std::log(0.5), -1.0, 0.2, 0.0);
  EXPECT_TRUE(down.clipped);
  EXPECT_NEAR(down.loss, 0.8, 1e-12);
  // Pessimistic side stays unclipped.
  auto keep = grpo_token_terms(std::log(0.5), 0.0, 0.0, 1.0, 0.2, 0.0);
  EXPECT_FALSE(keep.clipped);
  EXPECT_NEAR(keep.dloss_dlogp, -0.5, 1e-12);
}

TEST(GrpoTokenTerms, DerivativeMatchesFiniteDifference) {
  const double h = 1e-6;
  for (double cur : {-1.3, -0.2, -0.05})
    for (double adv : {-1.5, 0.4}) {
      auto t = grpo_token_terms(cur, -0.2, -0.9, adv, 0.2, 0.3);
      const double up = grpo_token_terms(cur + h, -0.2, -0.9, adv, 0.2, 0.3).loss;
      const double dn = grpo_token_terms(cur - h, -0.2, -0.9, adv, 0.2, 0.3).loss;
      EXPECT_NEAR(t.dloss_dlogp, (up - dn) / (2 * h), 1e-6) << cur << " " << adv;
    }
}

TEST(GenerateGroup, ShapeAndDeterminism) {
  auto policy = tiny_policy();
  TokenCodec codec(4);
  auto recs = testing::small_records(2, 31);
  RewardScales scales;
  auto cfg = small_grpo();
  cfg.group_size = 8;
  auto a = generate_group(policy, recs[0], codec, scales, cfg, 7);
  auto b = generate_group(policy, recs[0], codec, scales, cfg, 7);
  ASSERT_EQ(a.rollouts.size(), 8u);
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(a.rollouts[i].completion, b.rollouts[i].completion);
    EXPECT_EQ(a.rollouts[i].advantage, b.rollouts[i].advantage);
    EXPECT_GE(a.rollouts[i].completion.size(), 1u);
    EXPECT_LE(a.rollouts[i].completion.size(), 186u);
    EXPECT_EQ(a.rollouts[i].behavior_log_probs.size(), a.rollouts[i].completion.size());
  }
}

TEST(GenerateGroup, VanishingTemperatureCollapsesGroup) {
  auto policy = tiny_policy();
  TokenCodec codec(4);
  auto recs = testing::small_records(1, 31);
  auto cfg = small_grpo();
  cfg.group_size = 8;
  cfg.temperature = 1e-6;
  auto g = generate_group(policy, recs[0], codec, RewardScales{}, cfg, 0);
  for (const auto& r : g.rollouts) {
    EXPECT_EQ(r.completion, g.rollouts[0].completion);
    EXPECT_EQ(r.advantage, 0.0);
  }
}

TEST(GenerateGroup, BehaviorLogProbsMatchRecomputation) {
  auto policy = tiny_policy();
  TokenCodec codec(4);
  auto cfg = small_grpo();
  for (const auto& rec : testing::small_records(3, 41)) {
    auto g = generate_group(policy, rec, codec, RewardScales{}, cfg, 2);
    for (const auto& r : g.rollouts) {
      auto seq = rollout_sequence(g, r);
      auto lp = policy.target_log_probs(policy.forward_tape(seq.ids));
      for (std::size_t j = 0; j < r.completion.size(); ++j)
        ASSERT_NEAR(r.behavior_log_probs[j], lp[g.prompt.size() + j], 1e-5);
    }
  }
}

std::vector<RolloutGroup> sample_groups(const Transformer<float>& policy, const GrpoConfig& cfg) {
  TokenCodec codec(4);
  std::vector<RolloutGroup> groups;
  RewardScales scales = scales_from_means(0.5, {0.3, 1.0, 1});
  for (const auto& rec : testing::small_records(2, 51)) groups.push_back(generate_group(policy, rec, codec, scales, cfg, 0));
  return groups;
}

TEST(GrpoLoss, ZeroAdvantageZeroBetaIsZero) {
  auto policy = tiny_policy();
  auto cfg = small_grpo();
  cfg.kl_beta = 0.0;
  auto groups = sample_groups(policy, cfg);
  for (auto& g : groups)
    for (auto& r : g.rollouts) r.advantage = 0.0;
  auto res = grpo_loss_and_grads(policy, policy, groups, cfg);
  EXPECT_EQ(res.stats.loss, 0.0);
  for (float x : res.grads) ASSERT_EQ(x, 0.0f);
  EXPECT_EQ(res.stats.mean_kl, 0.0);
  EXPECT_EQ(res.stats.max_ratio_deviation, 0.0);
}

TEST(GrpoLoss, UnclippedBetaZeroEqualsAdvantageWeightedLikelihood) {
  auto policy = tiny_policy();
  auto cfg = small_grpo();
  cfg.kl_beta = 0.0;
  cfg.clip_eps = 1e9;
  auto groups = sample_groups(policy, cfg);
  auto res = grpo_loss_and_grads(policy, policy, groups, cfg);

  std::vector<TokenSequence> batch;
  std::vector<std::vector<float>> weights;
  int n_rollouts = 0;
  for (const auto& g : groups) n_rollouts += static_cast<int>(g.rollouts.size());
  for (const auto& g : groups)
    for (const auto& r : g.rollouts) {
      batch.push_back(rollout_sequence(g, r));
      const double w = r.advantage / (static_cast<double>(r.completion.size()) * n_rollouts);
      weights.emplace_back(batch.back().ids.size(), static_cast<float>(w));
    }
  auto ref = weighted_token_loss<float>(policy, batch, weights);
  double scale = 0.0;
  for (float g : ref.grads) scale = std::max(scale, static_cast<double>(std::abs(g)));
  ASSERT_GT(scale, 0.0);
  for (std::size_t i = 0; i < ref.grads.size(); ++i)
    ASSERT_NEAR(res.grads[i], ref.grads[i], 1e-5 * scale) << i;
}

TEST(GrpoLoss, IdentityPolicyHasUnitRatioAndZeroKl) {
  auto policy = tiny_policy();
  auto cfg = small_grpo();
  auto groups = sample_groups(policy, cfg);
  auto res = grpo_loss_and_grads(policy, policy, groups, cfg);
  EXPECT_EQ(res.stats.mean_kl, 0.0);
  EXPECT_EQ(res.stats.clip_fraction, 0.0);
}

TEST(GrpoStep, BanditFavorsRewardedArm) {
  auto trace = testing::run_bandit(200, 8, 0.05, 1);
  EXPECT_NEAR(trace.initial_prob, 0.5, 1e-6);
  EXPECT_GE(trace.final_prob - trace.initial_prob, 0.2);
  EXPECT_LE(trace.max_abs_advantage_mean, 1e-9);
  EXPECT_TRUE(trace.reference_unchanged);
}

struct RunFixture {
  TokenCodec codec{4};
  std::vector<PuzzleRecord> train = testing::small_records(6, 61);
  std::vector<PuzzleRecord> val = testing::small_records(3, 62);
  Checkpoint sft;
  RewardScales scales;

  explicit RunFixture(double alpha = 0.75) {
    sft = make_checkpoint(tiny_policy(), codec.vocab().hash());
    BootstrapConfig bc;
    bc.seed = 5;
    scales = bootstrap_scales(model_from_checkpoint(sft), sft.content_hash(), codec, val, alpha, bc);
  }
};

TEST(BootstrapScales, DeterministicWithProvenance) {
  RunFixture f;
  BootstrapConfig bc;
  bc.seed = 5;
  auto again = bootstrap_scales(model_from_checkpoint(f.sft), f.sft.content_hash(), f.codec, f.val, 0.75, bc);
  EXPECT_EQ(again, f.scales);
  EXPECT_EQ(f.scales.checkpoint_hash, f.sft.content_hash());
  EXPECT_EQ(f.scales.validation_hash, corpus_hash(f.val));
  EXPECT_EQ(f.scales.n_samples, 3);
  EXPECT_THROW(bootstrap_scales(model_from_checkpoint(f.sft), "x", f.codec, {}, 0.75, bc), Error);
}

TEST(RunGrpo, ZeroStepsReturnsInput) {
  RunFixture f;
  auto cfg = small_grpo();
  cfg.steps = 0;
  auto res = run_grpo(f.sft, f.scales, f.train, f.val, cfg, f.codec);
  EXPECT_EQ(res.final_checkpoint, f.sft);
  EXPECT_EQ(res.final_checkpoint.content_hash(), f.sft.content_hash());
}

TEST(RunGrpo, RefusesForeignScales) {
  RunFixture f;
  auto scales = f.scales;
  scales.checkpoint_hash = std::string(64, '0');
  try {
    run_grpo(f.sft, scales, f.train, f.val, small_grpo(), f.codec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kProvenance);
  }
}

TEST(RunGrpo, PureCellRunHasNoOrderContribution) {
  RunFixture f(1.0);
  const auto before = f.sft;
  auto cfg = small_grpo();
  cfg.alpha = 1.0;
  auto res = run_grpo(f.sft, f.scales, f.train, f.val, cfg, f.codec);
  EXPECT_EQ(f.sft, before);
  EXPECT_EQ(f.scales.order_scale, 0.0);
  int step_rows = 0;
  for (const auto& row : res.log) {
    EXPECT_EQ(row.order_contribution, 0.0);
    step_rows += row.step > 0 ? 1 : 0;
  }
  EXPECT_EQ(step_rows, 3);
  EXPECT_EQ(res.final_checkpoint.metadata.at("phase"), "grpo");
  EXPECT_EQ(res.final_checkpoint.metadata.at("sft_checkpoint"), f.sft.content_hash());
  EXPECT_NE(res.final_checkpoint.params, f.sft.params);
}

TEST(RunGrpo, Deterministic) {
  RunFixture f;
  auto cfg = small_grpo();
  auto a = run_grpo(f.sft, f.scales, f.train, f.val, cfg, f.codec);
  auto b = run_grpo(f.sft, f.scales, f.train, f.val, cfg, f.codec);
  EXPECT_EQ(a.final_checkpoint.content_hash(), b.final_checkpoint.content_hash());
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].to_json(), b.log[i].to_json());
}

TEST(RunGrpo, SmokeRunRewardTrendsUp) {
  TokenCodec codec(4);
  auto recs = testing::small_records(40, 61);
  std::vector<PuzzleRecord> train(recs.begin(), recs.begin() + 32), val(recs.begin() + 32, recs.end());
  ModelConfig mc = tiny_config();
  mc.n_layers = 2;
  mc.d_model = 32;
  SftConfig sc;
  sc.lr = 3e-3;
  sc.batch_size = 16;
  sc.max_steps = 100;
  sc.eval_interval = 100;
  sc.weight_decay = 0.0;
  const auto sft = train_sft(train, val, mc, sc, codec).best;
  BootstrapConfig bc;
  bc.seed = 6;
  const auto scales = bootstrap_scales(model_from_checkpoint(sft), sft.content_hash(), codec, val, 1.0, bc);
  GrpoConfig cfg;
  cfg.group_size = 8;
  cfg.batch_prompts = 8;
  cfg.steps = 50;
  cfg.lr = 3e-4;
  cfg.weight_decay = 0.0;
  cfg.eval_interval = 50;
  cfg.val_limit = 4;
  cfg.seed = 6;
  const auto res = run_grpo(sft, scales, train, val, cfg, codec);
  double first = 0.0, last = 0.0;
  for (const auto& row : res.log) {
    if (row.step >= 1 && row.step <= 10) first += row.mean_r_total / 10;
    if (row.step > 40) last += row.mean_r_total / 10;
  }
  EXPECT_GT(last, first);
}

TEST(SweepAlpha, TableShape) {
  RunFixture f;
  auto solver = f.sft;
  solver.metadata["order"] = "solver";
  auto cfg = small_grpo();
  cfg.steps = 1;
  BootstrapConfig bc;
  bc.seed = 5;
  std::vector<double> alphas{0, 0.25, 0.5, 0.75, 1};
  auto report = sweep_alpha(f.sft, solver, f.train, f.val, f.val, alphas, cfg, bc, f.codec);
  ASSERT_EQ(report.rows.size(), alphas.size() + 2);
  for (const auto& row : report.rows) {
    EXPECT_GE(row.cell_accuracy, 0.0);
    EXPECT_LE(row.cell_accuracy, 1.0);
  }
  EXPECT_EQ(report.rows[3].label, "0.75 : 0.25");
  EXPECT_FALSE(report.rows[5].alpha.has_value());
  EXPECT_NE(report.to_table().find("Fine-tuned (solver order)"), std::string::npos);
}

}  // namespace
}  // namespace sgrpo
