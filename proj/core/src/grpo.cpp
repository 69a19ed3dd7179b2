#include "sudoku_grpo/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "sudoku_grpo/error.hpp"
#include "sudoku_grpo/rng.hpp"
#include "sudoku_grpo/sampling.hpp"

namespace sgrpo {

void GrpoConfig::validate() const {
  if (group_size < 2) throw_input("grpo: group_size must be >= 2");
  if (kl_beta < 0.0) throw_input("grpo: kl_beta must be >= 0");
  if (!(clip_eps > 0.0)) throw_input("grpo: clip_eps must be > 0");
  if (max_new_tokens < 1) throw_input("grpo: max_new_tokens must be >= 1");
  if (batch_prompts < 1) throw_input("grpo: batch_prompts must be >= 1");
  if (steps < 0) throw_input("grpo: steps must be >= 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw_input("grpo: alpha must lie in [0, 1]");
  if (!(lr > 0.0)) throw_input("grpo: lr must be > 0");
  if (eval_interval < 1) throw_input("grpo: eval_interval must be >= 1");
}

GrpoConfig GrpoConfig::from_kv(const KvConfig& kv) {
  GrpoConfig c;
  auto key = [&](const std::string& k) { return kv.contains("grpo." + k) ? "grpo." + k : k; };
  c.group_size = static_cast<int>(kv.get_int(key("group_size"), c.group_size));
  c.lr = kv.get_double(key("lr"), c.lr);
  c.kl_beta = kv.get_double(key("kl_beta"), c.kl_beta);
  c.clip_eps = kv.get_double(key("clip_eps"), c.clip_eps);
  c.max_new_tokens = static_cast<int>(kv.get_int(key("max_new_tokens"), c.max_new_tokens));
  c.batch_prompts = static_cast<int>(kv.get_int(key("batch_prompts"), c.batch_prompts));
  c.steps = static_cast<int>(kv.get_int(key("steps"), c.steps));
  c.alpha = kv.get_double(key("alpha"), c.alpha);
  c.temperature = kv.get_double(key("temperature"), c.temperature);
  c.weight_decay = kv.get_double(key("weight_decay"), c.weight_decay);
  c.eval_interval = static_cast<int>(kv.get_int(key("eval_interval"), c.eval_interval));
  c.val_limit = static_cast<int>(kv.get_int(key("val_limit"), c.val_limit));
  c.seed = static_cast<std::uint64_t>(kv.get_int(key("seed"), static_cast<long long>(c.seed)));
  c.validate();
  return c;
}

std::vector<double> compute_advantages(std::span<const double> rewards) {
  std::vector<double> out(rewards.size(), 0.0);
  if (rewards.size() < 2) throw_input("advantages: need at least 2 rollouts per group");
  const auto [lo, hi] = std::minmax_element(rewards.begin(), rewards.end());
  if (*lo == *hi) return out;
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double std_dev = std::sqrt(var / n);
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    out[i] = (rewards[i] - mean) / (std_dev + kAdvantageEpsilon);
  }
  return out;
}

void assign_advantages(RolloutGroup& group) {
  std::vector<double> rewards;
  rewards.reserve(group.rollouts.size());
  for (const auto& r : group.rollouts) rewards.push_back(r.reward.r_total);
  const auto adv = compute_advantages(rewards);
  for (std::size_t i = 0; i < adv.size(); ++i) group.rollouts[i].advantage = adv[i];
}

RolloutGroup generate_group(const Transformer<float>& policy, const PuzzleRecord& record,
                            const TokenCodec& codec, const RewardScales& scales,
                            const GrpoConfig& config, std::uint64_t step) {
  RolloutGroup group;
  group.prompt_id = record.id;
  group.prompt = codec.encode_prompt(record.puzzle);
  const int budget =
      generation_budget(codec, static_cast<int>(group.prompt.size()), config.max_new_tokens);

  Transformer<float>::Decoder prefilled(policy);
  for (TokenId id : group.prompt) prefilled.step(id);
  const Transformer<float>::RowVec last = prefilled.logits();

  group.rollouts.resize(static_cast<std::size_t>(config.group_size));
  for (int i = 0; i < config.group_size; ++i) {
    const auto mode = SamplingMode::categorical(
        config.temperature,
        derive_seed(config.seed, "rollout." + record.id, step, static_cast<std::uint64_t>(i)));
    auto completion =
        continue_completion<float>(prefilled, last, mode, budget, Vocabulary::kEos);
    Rollout& r = group.rollouts[static_cast<std::size_t>(i)];
    r.completion = std::move(completion.ids);
    // Scored with the same full forward pass the update uses.
    std::vector<TokenId> ids = group.prompt;
    ids.insert(ids.end(), r.completion.begin(), r.completion.end());
    const auto logp = policy.target_log_probs(policy.forward_tape(ids));
    r.behavior_log_probs.assign(logp.begin() + static_cast<std::ptrdiff_t>(group.prompt.size()),
                                logp.end());
    r.decoded = codec.decode_completion(r.completion);
    r.reward = score_prediction(record.solver_order, r.decoded, scales);
  }
  assign_advantages(group);
  return group;
}

double kl_estimate(double logp_current, double logp_reference) {
  const double diff = logp_reference - logp_current;
  // exp(x) - x - 1 loses all precision near 0; expm1 keeps it non-negative.
  return std::expm1(diff) - diff;
}

GrpoTokenTerms grpo_token_terms(double logp_current, double logp_behavior, double logp_reference,
                                double advantage, double clip_eps, double kl_beta) {
  GrpoTokenTerms t;
  t.ratio = std::exp(logp_current - logp_behavior);
  const double clipped_ratio = std::clamp(t.ratio, 1.0 - clip_eps, 1.0 + clip_eps);
  const double unclipped = t.ratio * advantage;
  const double clipped = clipped_ratio * advantage;
  double pg_grad = 0.0;
  if (unclipped <= clipped) {
    t.loss = -unclipped;
    pg_grad = -advantage * t.ratio;
  } else {
    t.loss = -clipped;
    t.clipped = true;
  }
  t.kl = kl_estimate(logp_current, logp_reference);
  t.loss += kl_beta * t.kl;
  // d/dcur [exp(ref-cur) - (ref-cur) - 1] = 1 - exp(ref-cur)
  const double kl_grad = -std::expm1(logp_reference - logp_current);
  t.dloss_dlogp = pg_grad + kl_beta * kl_grad;
  return t;
}

TokenSequence rollout_sequence(const RolloutGroup& group, const Rollout& rollout) {
  TokenSequence seq;
  seq.ids = group.prompt;
  seq.prompt_len = static_cast<int>(group.prompt.size());
  seq.ids.insert(seq.ids.end(), rollout.completion.begin(), rollout.completion.end());
  seq.length = static_cast<int>(seq.ids.size());
  seq.loss_mask.assign(seq.ids.size(), false);
  for (std::size_t t = group.prompt.size(); t < seq.ids.size(); ++t) seq.loss_mask[t] = true;
  return seq;
}

GrpoGradients grpo_loss_and_grads(const Transformer<float>& policy,
                                  const Transformer<float>& reference,
                                  std::span<const RolloutGroup> groups, const GrpoConfig& config) {
  GrpoGradients out;
  out.grads.assign(policy.num_params(), 0.0f);
  int n_rollouts = 0;
  for (const auto& g : groups) {
    for (const auto& r : g.rollouts) n_rollouts += r.completion.empty() ? 0 : 1;
  }
  if (n_rollouts == 0) throw_input("grpo: no non-empty rollouts in batch");
  out.stats.n_rollouts = n_rollouts;

  double kl_sum = 0.0;
  int clipped = 0;
  for (const auto& g : groups) {
    const std::size_t prompt_len = g.prompt.size();
    for (const auto& r : g.rollouts) {
      const std::size_t n = r.completion.size();
      if (n == 0) continue;
      if (r.behavior_log_probs.size() != n) throw_input("grpo: behavior log-probs misaligned");
      std::vector<TokenId> ids = g.prompt;
      ids.insert(ids.end(), r.completion.begin(), r.completion.end());

      const auto tape = policy.forward_tape(ids);
      const auto logp = policy.target_log_probs(tape);
      const auto ref_logp = reference.target_log_probs(reference.forward_tape(ids));

      const double weight = 1.0 / (static_cast<double>(n) * n_rollouts);
      std::vector<float> coeff(ids.size(), 0.0f);
      bool any = false;
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t t = prompt_len + j;
        const auto terms = grpo_token_terms(logp[t], r.behavior_log_probs[j], ref_logp[t],
                                            r.advantage, config.clip_eps, config.kl_beta);
        out.stats.loss += weight * terms.loss;
        kl_sum += terms.kl;
        clipped += terms.clipped ? 1 : 0;
        out.stats.max_ratio_deviation =
            std::max(out.stats.max_ratio_deviation, std::abs(terms.ratio - 1.0));
        coeff[t] = static_cast<float>(weight * terms.dloss_dlogp);
        any = any || coeff[t] != 0.0f;
      }
      out.stats.n_tokens += static_cast<int>(n);
      if (any) policy.backward(tape, coeff, out.grads);
    }
  }
  out.stats.mean_kl = kl_sum / out.stats.n_tokens;
  out.stats.clip_fraction = static_cast<double>(clipped) / out.stats.n_tokens;
  return out;
}

GrpoStepStats grpo_step(Transformer<float>& policy, AdamW<float>& optimizer,
                        const Transformer<float>& reference, std::span<const RolloutGroup> groups,
                        const GrpoConfig& config) {
  auto result = grpo_loss_and_grads(policy, reference, groups, config);
  if (!std::isfinite(result.stats.loss)) throw_numerical("grpo: non-finite loss");
  optimizer.step(policy.params(), result.grads);
  return result.stats;
}

std::string GrpoMetricsRow::to_json() const {
  nlohmann::json j{{"step", step},
                   {"alpha", alpha},
                   {"mean_r_cell", mean_r_cell},
                   {"mean_r_order", mean_r_order},
                   {"mean_r_total", mean_r_total},
                   {"mean_normalized_order", mean_normalized_order},
                   {"cell_contribution", cell_contribution},
                   {"order_contribution", order_contribution},
                   {"mean_kl", mean_kl},
                   {"clip_fraction", clip_fraction},
                   {"loss", loss},
                   {"mean_completion_tokens", mean_completion_tokens}};
  if (val_cell_accuracy) j["val_cell_accuracy"] = *val_cell_accuracy;
  return j.dump();
}

GrpoResult run_grpo(const Checkpoint& sft, const RewardScales& scales,
                    std::span<const PuzzleRecord> train, std::span<const PuzzleRecord> validation,
                    const GrpoConfig& config, const TokenCodec& codec,
                    const GrpoProgress& progress) {
  config.validate();
  const std::string sft_hash = sft.content_hash();
  if (scales.checkpoint_hash != sft_hash) {
    throw Error(ErrorKind::kProvenance,
                "reward scales were calibrated on checkpoint " +
                    scales.checkpoint_hash.substr(0, 12) + ", not " + sft_hash.substr(0, 12));
  }
  require_vocab(sft, codec.vocab());
  if (train.empty()) throw_input("grpo: training split is empty");

  GrpoResult result;
  result.final_checkpoint = sft;
  result.best_checkpoint = sft;
  if (config.steps == 0) return result;

  const Transformer<float> reference = model_from_checkpoint(sft);
  Transformer<float> policy = model_from_checkpoint(sft);
  AdamW<float> opt(policy.num_params(),
                   AdamWHyper{config.lr, config.weight_decay, 0.9, 0.999, 1e-8});

  const auto val =
      validation.first(config.val_limit > 0
                           ? std::min<std::size_t>(validation.size(),
                                                   static_cast<std::size_t>(config.val_limit))
                           : validation.size());
  auto snapshot = [&](std::int64_t step) {
    Checkpoint c = make_checkpoint(policy, sft.vocab_hash, &opt, sft.step + step);
    c.metadata = sft.metadata;
    c.metadata["phase"] = "grpo";
    c.metadata["alpha"] = nlohmann::json(scales.alpha).dump();
    c.metadata["grpo_steps"] = std::to_string(step);
    c.metadata["sft_checkpoint"] = sft_hash;
    return c;
  };
  auto emit = [&](GrpoMetricsRow row) {
    if (progress) progress(row);
    result.log.push_back(std::move(row));
  };

  bool have_best = false;
  auto maybe_eval = [&](std::int64_t step, GrpoMetricsRow& row) {
    if (val.empty()) return;
    const double acc = evaluate(policy, codec, val, config.max_new_tokens).cell_accuracy;
    row.val_cell_accuracy = acc;
    if (!have_best || acc > result.best_val_accuracy) {
      have_best = true;
      result.best_val_accuracy = acc;
      result.best_step = step;
      result.best_checkpoint = snapshot(step);
    }
  };

  {
    GrpoMetricsRow initial;
    initial.step = 0;
    initial.alpha = scales.alpha;
    maybe_eval(0, initial);
    if (initial.val_cell_accuracy) emit(initial);
  }

  std::vector<std::size_t> order(train.size());
  std::size_t cursor = order.size();
  std::uint64_t epoch = 0;
  std::vector<RolloutGroup> groups;
  for (std::int64_t step = 1; step <= config.steps; ++step) {
    groups.clear();
    for (int b = 0; b < config.batch_prompts; ++b) {
      if (cursor == order.size()) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng = make_rng(config.seed, "grpo.prompts", epoch++);
        for (std::size_t i = order.size(); i > 1; --i) {
          std::swap(order[i - 1], order[uniform_below(rng, i)]);
        }
        cursor = 0;
      }
      groups.push_back(generate_group(policy, train[order[cursor++]], codec, scales, config,
                                      static_cast<std::uint64_t>(step)));
    }

    const auto stats = grpo_step(policy, opt, reference, groups, config);

    GrpoMetricsRow row;
    row.step = step;
    row.alpha = scales.alpha;
    double n = 0.0;
    double tokens = 0.0;
    for (const auto& g : groups) {
      for (const auto& r : g.rollouts) {
        row.mean_r_cell += r.reward.r_cell;
        row.mean_r_order += r.reward.r_order;
        row.mean_r_total += r.reward.r_total;
        row.mean_normalized_order += r.reward.normalized_order();
        tokens += static_cast<double>(r.completion.size());
        n += 1.0;
      }
    }
    row.mean_r_cell /= n;
    row.mean_r_order /= n;
    row.mean_r_total /= n;
    row.mean_normalized_order /= n;
    row.mean_completion_tokens = tokens / n;
    row.cell_contribution = scales.cell_scale * row.mean_r_cell;
    row.order_contribution = scales.order_scale * row.mean_r_order;
    row.mean_kl = stats.mean_kl;
    row.clip_fraction = stats.clip_fraction;
    row.loss = stats.loss;
    if (step % config.eval_interval == 0) maybe_eval(step, row);
    emit(std::move(row));
  }
  result.final_checkpoint = snapshot(config.steps);
  if (!have_best) result.best_checkpoint = result.final_checkpoint;
  return result;
}

std::string mixture_label(double alpha) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g : %g", alpha, 1.0 - alpha);
  return buf;
}

std::string SweepReport::to_table() const {
  std::size_t width = std::string("Cell : Order Weight").size();
  for (const auto& r : rows) width = std::max(width, r.label.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-*s  %s\n", static_cast<int>(width), "Cell : Order Weight",
                "Cell Accuracy");
  out += buf;
  out += std::string(width + 15, '-') + "\n";
  bool baseline_rule = false;
  for (const auto& r : rows) {
    if (!r.alpha && !baseline_rule) {
      out += std::string(width + 15, '-') + "\n";
      baseline_rule = true;
    }
    std::snprintf(buf, sizeof(buf), "%-*s  %.3f\n", static_cast<int>(width), r.label.c_str(),
                  r.cell_accuracy);
    out += buf;
  }
  return out;
}

std::string SweepReport::to_json() const {
  nlohmann::json mixtures = nlohmann::json::array();
  nlohmann::json baselines = nlohmann::json::array();
  for (const auto& r : rows) {
    if (r.alpha) {
      mixtures.push_back({{"label", r.label},
                          {"alpha", *r.alpha},
                          {"cell_weight", *r.alpha},
                          {"order_weight", 1.0 - *r.alpha},
                          {"cell_accuracy", r.cell_accuracy}});
    } else {
      baselines.push_back({{"label", r.label}, {"cell_accuracy", r.cell_accuracy}});
    }
  }
  return nlohmann::json{{"mixtures", mixtures}, {"baselines", baselines}}.dump(2) + "\n";
}

SweepReport sweep_alpha(const Checkpoint& random_sft, const Checkpoint& solver_sft,
                        std::span<const PuzzleRecord> train,
                        std::span<const PuzzleRecord> validation,
                        std::span<const PuzzleRecord> test, std::span<const double> alphas,
                        const GrpoConfig& config, const BootstrapConfig& bootstrap,
                        const TokenCodec& codec, const SweepHook& hook) {
  if (alphas.empty()) throw_input("sweep: no alpha values given");
  if (test.empty()) throw_input("sweep: test split is empty");
  require_vocab(random_sft, codec.vocab());
  require_vocab(solver_sft, codec.vocab());

  // Means depend only on the frozen checkpoint, so one bootstrap pass
  // serves every alpha; the scales differ per alpha.
  const auto random_model = model_from_checkpoint(random_sft);
  const auto means = measure_bootstrap_means(random_model, codec, validation, bootstrap);
  const std::string ckpt_hash = random_sft.content_hash();
  const std::string val_hash =
      corpus_hash(std::vector<PuzzleRecord>(validation.begin(), validation.end()));

  SweepReport report;
  for (double alpha : alphas) {
    RewardScales scales = scales_from_means(alpha, means);
    scales.sample_seed = bootstrap.seed;
    scales.temperature = bootstrap.temperature;
    scales.checkpoint_hash = ckpt_hash;
    scales.validation_hash = val_hash;
    GrpoConfig run_config = config;
    run_config.alpha = alpha;
    auto run = run_grpo(random_sft, scales, train, validation, run_config, codec);
    auto eval = evaluate_checkpoint(run.final_checkpoint, codec, test, config.max_new_tokens);
    report.rows.push_back({mixture_label(alpha), alpha, eval.cell_accuracy});
    if (hook) hook(alpha, scales, run, eval);
  }
  report.rows.push_back({"Fine-tuned (random order)", std::nullopt,
                         evaluate(random_model, codec, test, config.max_new_tokens).cell_accuracy});
  report.rows.push_back(
      {"Fine-tuned (solver order)", std::nullopt,
       evaluate_checkpoint(solver_sft, codec, test, config.max_new_tokens).cell_accuracy});
  return report;
}

}  // namespace sgrpo
