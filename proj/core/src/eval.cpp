#include "sudoku_grpo/eval.hpp"

#include <cstdio>

#include <json.hpp>

#include "sudoku_grpo/error.hpp"
#include "sudoku_grpo/reward.hpp"
#include "sudoku_grpo/sampling.hpp"

namespace sgrpo {

std::string EvalReport::to_json() const {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& r : records) {
    per.push_back({{"id", r.id},
                   {"r_cell", r.r_cell},
                   {"r_order", r.r_order},
                   {"normalized_order", r.normalized_order},
                   {"n_correct", r.n_correct},
                   {"n_solution", r.n_solution}});
  }
  nlohmann::json j{{"split", split},
                   {"n_records", n_records},
                   {"cell_accuracy", cell_accuracy},
                   {"micro_cell_accuracy", micro_cell_accuracy},
                   {"full_solve_rate", full_solve_rate},
                   {"mean_order_reward", mean_order_reward},
                   {"mean_normalized_order", mean_normalized_order},
                   {"records", per}};
  return j.dump(2) + "\n";
}

std::string EvalReport::summary() const {
  char buf[320];
  std::snprintf(buf, sizeof(buf),
                "split=%s records=%d cell_accuracy=%.4f micro=%.4f full_solve=%.4f "
                "order_reward=%.4f normalized_order=%.4f",
                split.c_str(), n_records, cell_accuracy, micro_cell_accuracy, full_solve_rate,
                mean_order_reward, mean_normalized_order);
  return buf;
}

EvalReport evaluate_policy(std::span<const PuzzleRecord> records, const TokenCodec& codec,
                           const CompletionPolicy& policy) {
  if (records.empty()) throw_input("evaluate: split is empty");
  EvalReport report;
  report.split = std::string(split_name(records.front().split));
  report.n_records = static_cast<int>(records.size());
  long pooled_correct = 0;
  long pooled_total = 0;
  int solved = 0;
  const RewardScales unit;  // scales do not matter for the diagnostics below
  for (const auto& rec : records) {
    const auto prompt = codec.encode_prompt(rec.puzzle);
    const auto generated = policy(rec, prompt);
    const auto predicted = codec.decode_completion(generated);
    const auto b = score_prediction(rec.solver_order, predicted, unit);
    report.records.push_back(
        {rec.id, b.r_cell, b.r_order, b.normalized_order(), b.n_correct, b.n_solution});
    report.cell_accuracy += b.r_cell;
    report.mean_order_reward += b.r_order;
    report.mean_normalized_order += b.normalized_order();
    pooled_correct += b.n_correct;
    pooled_total += b.n_solution;
    if (b.n_correct == b.n_solution) ++solved;
  }
  const double n = static_cast<double>(records.size());
  report.cell_accuracy /= n;
  report.mean_order_reward /= n;
  report.mean_normalized_order /= n;
  report.full_solve_rate = solved / n;
  report.micro_cell_accuracy =
      pooled_total > 0 ? static_cast<double>(pooled_correct) / static_cast<double>(pooled_total) : 0.0;
  return report;
}

EvalReport evaluate(const Transformer<float>& model, const TokenCodec& codec,
                    std::span<const PuzzleRecord> records, int max_new_tokens) {
  return evaluate_policy(records, codec, [&](const PuzzleRecord&, std::span<const TokenId> prompt) {
    const int budget = generation_budget(codec, static_cast<int>(prompt.size()), max_new_tokens);
    return sample_completion(model, prompt, SamplingMode::greedy(), budget).ids;
  });
}

EvalReport evaluate_checkpoint(const Checkpoint& ckpt, const TokenCodec& codec,
                               std::span<const PuzzleRecord> records, int max_new_tokens) {
  require_vocab(ckpt, codec.vocab());
  const auto model = model_from_checkpoint(ckpt);
  return evaluate(model, codec, records, max_new_tokens);
}

}  // namespace sgrpo
