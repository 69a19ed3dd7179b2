#include "sudoku_grpo/reward.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "sudoku_grpo/error.hpp"
#include "sudoku_grpo/rng.hpp"
#include "sudoku_grpo/sampling.hpp"

namespace sgrpo {
namespace {

using nlohmann::json;

// Cell key for a 9x9-or-smaller board.
int cell_key(const Move& m) { return m.row * 16 + m.col; }

}  // namespace

std::string RewardScales::to_json() const {
  json j{
      {"alpha", alpha},
      {"cell_scale", cell_scale},
      {"order_scale", order_scale},
      {"bootstrap_means", {{"mean_cell", mean_cell}, {"mean_order", mean_order}}},
      {"n_samples", n_samples},
      {"sampling", {{"seed", sample_seed}, {"temperature", temperature}}},
      {"epsilon", kScaleEpsilon},
      {"provenance", {{"checkpoint_hash", checkpoint_hash}, {"validation_hash", validation_hash}}},
  };
  return j.dump(2) + "\n";
}

RewardScales RewardScales::from_json(const std::string& text) {
  try {
    json j = json::parse(text);
    RewardScales s;
    s.alpha = j.at("alpha").get<double>();
    s.cell_scale = j.at("cell_scale").get<double>();
    s.order_scale = j.at("order_scale").get<double>();
    s.mean_cell = j.at("bootstrap_means").at("mean_cell").get<double>();
    s.mean_order = j.at("bootstrap_means").at("mean_order").get<double>();
    s.n_samples = j.at("n_samples").get<int>();
    s.sample_seed = j.at("sampling").at("seed").get<std::uint64_t>();
    s.temperature = j.at("sampling").at("temperature").get<double>();
    s.checkpoint_hash = j.at("provenance").at("checkpoint_hash").get<std::string>();
    s.validation_hash = j.at("provenance").at("validation_hash").get<std::string>();
    return s;
  } catch (const json::exception& e) {
    throw_input(std::string("reward scales: ") + e.what());
  }
}

void RewardScales::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << to_json();
}

RewardScales RewardScales::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

CellAccuracy cell_accuracy(const Trajectory& solution, const Trajectory& predicted) {
  if (solution.empty()) throw_input("cell_accuracy: empty solution set");
  std::unordered_map<int, int> truth;
  truth.reserve(solution.size());
  for (const Move& m : solution) truth.emplace(cell_key(m), m.val);
  std::unordered_map<int, bool> seen;
  int correct = 0;
  for (const Move& m : predicted) {
    const int key = cell_key(m);
    if (!seen.emplace(key, true).second) continue;
    auto it = truth.find(key);
    if (it != truth.end() && it->second == m.val) ++correct;
  }
  return {static_cast<double>(correct) / static_cast<double>(solution.size()), correct};
}

double order_reward(const Trajectory& solver, const Trajectory& predicted) {
  struct Ref {
    int val;
    int index;
  };
  std::unordered_map<int, Ref> ref;
  ref.reserve(solver.size());
  for (std::size_t i = 0; i < solver.size(); ++i) {
    ref.emplace(cell_key(solver[i]), Ref{solver[i].val, static_cast<int>(i)});
  }
  std::unordered_map<int, bool> seen;
  double total = 0.0;
  int emitted = 0;
  for (const Move& m : predicted) {
    const int key = cell_key(m);
    if (!seen.emplace(key, true).second) continue;
    const int idx = emitted++;
    auto it = ref.find(key);
    if (it == ref.end() || it->second.val != m.val) continue;
    total += 1.0 / (1.0 + std::abs(it->second.index - idx));
  }
  return total;
}

double total_reward(double r_cell, double r_order, const RewardScales& scales) {
  return scales.cell_scale * r_cell + scales.order_scale * r_order;
}

RewardBreakdown score_prediction(const Trajectory& solver, const Trajectory& predicted,
                                 const RewardScales& scales) {
  RewardBreakdown b;
  auto acc = cell_accuracy(solver, predicted);
  b.r_cell = acc.r_cell;
  b.n_correct = acc.n_correct;
  b.n_solution = static_cast<int>(solver.size());
  b.r_order = order_reward(solver, predicted);
  b.r_total = total_reward(b.r_cell, b.r_order, scales);
  return b;
}

int generation_budget(const TokenCodec& codec, int prompt_len, int requested) {
  return std::max(1, std::min(requested, codec.max_len() - prompt_len));
}

BootstrapMeans measure_bootstrap_means(const Transformer<float>& policy, const TokenCodec& codec,
                                       std::span<const PuzzleRecord> records,
                                       const BootstrapConfig& config) {
  if (records.empty()) throw_input("bootstrap: validation split is empty");
  BootstrapMeans means;
  double sum_cell = 0.0;
  double sum_order = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    const auto prompt = codec.encode_prompt(rec.puzzle);
    const int budget = generation_budget(codec, static_cast<int>(prompt.size()), config.max_new_tokens);
    const auto mode = SamplingMode::categorical(config.temperature,
                                                derive_seed(config.seed, "bootstrap", i));
    const auto completion = sample_completion(policy, prompt, mode, budget);
    const auto predicted = codec.decode_completion(completion.ids);
    sum_cell += cell_accuracy(rec.solver_order, predicted).r_cell;
    sum_order += order_reward(rec.solver_order, predicted);
  }
  means.n_samples = static_cast<int>(records.size());
  means.mean_cell = sum_cell / static_cast<double>(records.size());
  means.mean_order = sum_order / static_cast<double>(records.size());
  return means;
}

RewardScales scales_from_means(double alpha, const BootstrapMeans& means) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw_input("alpha must lie in [0, 1]");
  RewardScales s;
  s.alpha = alpha;
  s.mean_cell = means.mean_cell;
  s.mean_order = means.mean_order;
  s.n_samples = means.n_samples;
  s.cell_scale = alpha / std::max(means.mean_cell, kScaleEpsilon);
  s.order_scale = (1.0 - alpha) / std::max(means.mean_order, kScaleEpsilon);
  return s;
}

RewardScales bootstrap_scales(const Transformer<float>& policy, const std::string& checkpoint_hash,
                              const TokenCodec& codec, std::span<const PuzzleRecord> validation,
                              double alpha, const BootstrapConfig& config) {
  auto means = measure_bootstrap_means(policy, codec, validation, config);
  RewardScales s = scales_from_means(alpha, means);
  s.sample_seed = config.seed;
  s.temperature = config.temperature;
  s.checkpoint_hash = checkpoint_hash;
  s.validation_hash =
      corpus_hash(std::vector<PuzzleRecord>(validation.begin(), validation.end()));
  return s;
}

}  // namespace sgrpo
