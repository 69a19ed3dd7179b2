#include <benchmark/benchmark.h>

#include "sudoku_grpo/grpo.hpp"
#include "sudoku_grpo/reward.hpp"
#include "sudoku_grpo/sampling.hpp"
#include "sudoku_grpo/sudoku.hpp"

namespace {

using namespace sgrpo;

void BM_SolveReference(benchmark::State& state) {
  const auto gen = generate_puzzle(1, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_reference(gen.puzzle));
}
BENCHMARK(BM_SolveReference)->Arg(24)->Arg(30)->Arg(36);

void BM_UniquenessCheck(benchmark::State& state) {
  const auto gen = generate_puzzle(2, 26);
  for (auto _ : state) benchmark::DoNotOptimize(solve_all(gen.puzzle, 2));
}
BENCHMARK(BM_UniquenessCheck);

void BM_GeneratePuzzle(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate_puzzle(seed++, 30));
}
BENCHMARK(BM_GeneratePuzzle)->Unit(benchmark::kMillisecond);

struct ModelFixture {
  TokenCodec codec;
  Transformer<float> model;
  std::vector<TokenSequence> batch;

  ModelFixture(int side, int d_model, int batch_size)
      : codec(side), model(make_config(side, d_model)) {
    model.init_weights(1);
    for (int i = 0; i < batch_size; ++i) {
      const auto gen = generate_puzzle(static_cast<std::uint64_t>(i), side == 9 ? 30 : 8, side);
      PuzzleRecord rec{"b", gen.puzzle, gen.solver_order, shuffle_trajectory(gen.solver_order, 1), Split::kTrain};
      batch.push_back(codec.encode(rec, Order::kRandom));
    }
  }

  ModelConfig make_config(int side, int d_model) const {
    auto c = ModelConfig::desk(codec.vocab().size(), codec.max_len(), 1);
    c.d_model = d_model;
    return c;
  }
};

void BM_Forward(benchmark::State& state) {
  ModelFixture f(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 1);
  const auto& ids = f.batch[0].ids;
  for (auto _ : state) benchmark::DoNotOptimize(f.model.forward(ids));
}
BENCHMARK(BM_Forward)->Args({4, 128})->Args({9, 128})->Unit(benchmark::kMillisecond);

void BM_LossAndGrads(benchmark::State& state) {
  ModelFixture f(static_cast<int>(state.range(0)), 128, 8);
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_grads<float>(f.model, f.batch));
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_LossAndGrads)->Arg(4)->Arg(9)->Unit(benchmark::kMillisecond);

void BM_SampleCompletion(benchmark::State& state) {
  ModelFixture f(static_cast<int>(state.range(0)), 128, 1);
  const std::vector<TokenId> prompt(f.batch[0].ids.begin(), f.batch[0].ids.begin() + f.batch[0].prompt_len);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_completion<float>(f.model, prompt, SamplingMode::categorical(1.0, seed++),
                                                      186, std::nullopt));
  }
}
BENCHMARK(BM_SampleCompletion)->Arg(4)->Arg(9)->Unit(benchmark::kMillisecond);

void BM_Rewards(benchmark::State& state) {
  const auto gen = generate_puzzle(5, 25);
  const auto predicted = shuffle_trajectory(gen.solver_order, 3);
  RewardScales scales = scales_from_means(0.75, {0.4, 10.0, 1});
  for (auto _ : state) benchmark::DoNotOptimize(score_prediction(gen.solver_order, predicted, scales));
}
BENCHMARK(BM_Rewards);

void BM_AdamWStep(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  AdamW<float> opt(n, AdamWHyper{});
  AlignedVector<float> p(n, 0.5f), g(n, 0.01f);
  for (auto _ : state) opt.step(p, g);
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(n * sizeof(float) * 4));
}
BENCHMARK(BM_AdamWStep)->Arg(1 << 20);

}  // namespace

BENCHMARK_MAIN();
