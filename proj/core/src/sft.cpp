#include "sudoku_grpo/sft.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "sudoku_grpo/adamw.hpp"
#include "sudoku_grpo/error.hpp"
#include "sudoku_grpo/eval.hpp"
#include "sudoku_grpo/rng.hpp"

namespace sgrpo {

void SftConfig::validate() const {
  if (!(lr > 0.0)) throw_input("sft: lr must be > 0");
  if (patience < 1) throw_input("sft: patience must be >= 1");
  if (batch_size < 1) throw_input("sft: batch_size must be >= 1");
  if (max_steps < 0) throw_input("sft: max_steps must be >= 0");
  if (eval_interval < 1) throw_input("sft: eval_interval must be >= 1");
  if (weight_decay < 0.0) throw_input("sft: weight_decay must be >= 0");
}

SftConfig SftConfig::defaults_for(Order order) {
  SftConfig c;
  c.order = order;
  c.lr = order == Order::kSolver ? 1e-5 : 5e-5;
  return c;
}

SftConfig SftConfig::from_kv(const KvConfig& kv, Order order) {
  SftConfig c = defaults_for(order);
  auto key = [&](const std::string& k) { return kv.contains("sft." + k) ? "sft." + k : k; };
  c.lr = kv.get_double(key("lr"), c.lr);
  c.batch_size = static_cast<int>(kv.get_int(key("batch_size"), c.batch_size));
  c.weight_decay = kv.get_double(key("weight_decay"), c.weight_decay);
  c.patience = static_cast<int>(kv.get_int(key("patience"), c.patience));
  c.max_steps = static_cast<int>(kv.get_int(key("max_steps"), c.max_steps));
  c.eval_interval = static_cast<int>(kv.get_int(key("eval_interval"), c.eval_interval));
  c.log_interval = static_cast<int>(kv.get_int(key("log_interval"), c.log_interval));
  c.val_limit = static_cast<int>(kv.get_int(key("val_limit"), c.val_limit));
  c.max_new_tokens = static_cast<int>(kv.get_int(key("max_new_tokens"), c.max_new_tokens));
  c.seed = static_cast<std::uint64_t>(kv.get_int(key("seed"), static_cast<long long>(c.seed)));
  c.validate();
  return c;
}

std::string SftMetricsRow::to_json() const {
  nlohmann::json j{{"step", step}, {"split", split}};
  j["loss"] = loss ? nlohmann::json(*loss) : nlohmann::json(nullptr);
  j["cell_accuracy"] = cell_accuracy ? nlohmann::json(*cell_accuracy) : nlohmann::json(nullptr);
  return j.dump();
}

SftResult train_sft(std::span<const PuzzleRecord> train, std::span<const PuzzleRecord> validation,
                    const ModelConfig& model_config, const SftConfig& config,
                    const TokenCodec& codec, const SftProgress& progress) {
  config.validate();
  if (train.empty()) throw_input("sft: training split is empty");
  if (validation.empty()) throw_input("sft: validation split is empty");
  if (model_config.vocab_size != codec.vocab().size()) {
    throw_input("sft: model vocab_size does not match the codec vocabulary");
  }

  Transformer<float> model(model_config);
  model.init_weights(model_config.seed);
  AdamW<float> opt(model.num_params(),
                   AdamWHyper{config.lr, config.weight_decay, 0.9, 0.999, 1e-8});

  std::vector<TokenSequence> encoded;
  encoded.reserve(train.size());
  for (const auto& rec : train) encoded.push_back(codec.encode(rec, config.order));

  const auto val = validation.first(config.val_limit > 0
                                        ? std::min<std::size_t>(validation.size(),
                                                                static_cast<std::size_t>(config.val_limit))
                                        : validation.size());
  const std::string vocab_hash = codec.vocab().hash();

  SftResult result;
  auto record = [&](SftMetricsRow row) {
    if (progress) progress(row);
    result.log.push_back(std::move(row));
  };
  auto snapshot = [&](std::int64_t step) {
    Checkpoint c = make_checkpoint(model, vocab_hash, &opt, step);
    c.metadata["phase"] = "sft";
    c.metadata["order"] = std::string(order_name(config.order));
    return c;
  };

  int stale = 0;
  auto run_eval = [&](std::int64_t step) {
    const double acc = evaluate(model, codec, val, config.max_new_tokens).cell_accuracy;
    ++result.evaluations;
    record({step, "validation", std::nullopt, acc});
    if (result.evaluations == 1 || acc > result.best_val_accuracy) {
      result.best_val_accuracy = acc;
      result.best_step = step;
      result.best = snapshot(step);
      stale = 0;
    } else {
      ++stale;
    }
  };

  run_eval(0);

  // Epoch-wise seeded permutation of the training records.
  std::vector<std::size_t> order(encoded.size());
  std::size_t cursor = order.size();
  std::uint64_t epoch = 0;
  std::vector<TokenSequence> batch;
  double loss_acc = 0.0;
  int loss_count = 0;

  for (std::int64_t step = 1; step <= config.max_steps; ++step) {
    batch.clear();
    for (int b = 0; b < config.batch_size; ++b) {
      if (cursor == order.size()) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng = make_rng(config.seed, "sft.batches", epoch++);
        for (std::size_t i = order.size(); i > 1; --i) {
          std::swap(order[i - 1], order[uniform_below(rng, i)]);
        }
        cursor = 0;
      }
      batch.push_back(encoded[order[cursor++]]);
    }
    auto lg = loss_and_grads<float>(model, batch);
    if (!std::isfinite(lg.loss)) {
      throw_numerical("sft: non-finite loss at step " + std::to_string(step));
    }
    opt.step(model.params(), lg.grads);
    result.steps_run = step;
    loss_acc += lg.loss;
    ++loss_count;

    if (config.log_interval > 0 && step % config.log_interval == 0) {
      record({step, "train", loss_acc / loss_count, std::nullopt});
      loss_acc = 0.0;
      loss_count = 0;
    }
    if (step % config.eval_interval == 0) {
      run_eval(step);
      if (stale >= config.patience) {
        result.early_stopped = true;
        break;
      }
    }
  }
  return result;
}

}  // namespace sgrpo
