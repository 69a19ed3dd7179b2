#include <gtest/gtest.h>

#include <json.hpp>

#include "sudoku_grpo/error.hpp"
#include "sudoku_grpo/eval.hpp"
#include "unit/test_util.hpp"

namespace sgrpo {
namespace {

TEST(EvaluatePolicy, SolverReplayIsPerfect) {
  TokenCodec codec(4);
  auto recs = testing::small_records(10, 71);
  auto report = evaluate_policy(recs, codec, [&](const PuzzleRecord& r, std::span<const TokenId>) {
    return codec.encode_moves(r.solver_order);
  });
  EXPECT_EQ(report.n_records, 10);
  EXPECT_DOUBLE_EQ(report.cell_accuracy, 1.0);
  EXPECT_DOUBLE_EQ(report.micro_cell_accuracy, 1.0);
  EXPECT_DOUBLE_EQ(report.full_solve_rate, 1.0);
  EXPECT_DOUBLE_EQ(report.mean_normalized_order, 1.0);
}

TEST(EvaluatePolicy, EosOnlyScoresZero) {
  TokenCodec codec(4);
  auto recs = testing::small_records(5, 72);
  auto report = evaluate_policy(recs, codec, [](const PuzzleRecord&, std::span<const TokenId>) {
    return std::vector<TokenId>{Vocabulary::kEos};
  });
  EXPECT_EQ(report.cell_accuracy, 0.0);
  EXPECT_EQ(report.full_solve_rate, 0.0);
  EXPECT_EQ(report.mean_order_reward, 0.0);
}

TEST(EvaluatePolicy, MacroAndMicroDiffer) {
  TokenCodec codec(4);
  auto recs = testing::small_records(2, 73, 6);
  recs[1] = testing::small_records(1, 74, 12)[0];
  // First record fully right, second empty: macro 0.5, micro weighted by blanks.
  auto report = evaluate_policy(recs, codec, [&](const PuzzleRecord& r, std::span<const TokenId>) {
    return r.id == recs[0].id && r.puzzle == recs[0].puzzle ? codec.encode_moves(r.random_order)
                                                             : std::vector<TokenId>{};
  });
  const double n0 = static_cast<double>(recs[0].solver_order.size());
  const double n1 = static_cast<double>(recs[1].solver_order.size());
  EXPECT_DOUBLE_EQ(report.cell_accuracy, 0.5);
  EXPECT_DOUBLE_EQ(report.micro_cell_accuracy, n0 / (n0 + n1));
  EXPECT_DOUBLE_EQ(report.full_solve_rate, 0.5);
  int solved = 0;
  for (const auto& r : report.records) solved += r.n_correct == r.n_solution ? 1 : 0;
  EXPECT_DOUBLE_EQ(report.full_solve_rate, solved / 2.0);
}

TEST(EvaluatePolicy, EmptySplitIsError) {
  TokenCodec codec(4);
  EXPECT_THROW(evaluate_policy({}, codec, {}), Error);
}

TEST(EvaluateCheckpoint, DeterministicAndVocabChecked) {
  TokenCodec codec(4);
  ModelConfig cfg;
  cfg.n_layers = 1;
  cfg.n_heads = 1;
  cfg.d_model = 8;
  cfg.vocab_size = 9;
  cfg.max_seq_len = 51;
  Transformer<float> m(cfg);
  m.init_weights(2);
  auto ckpt = make_checkpoint(m, codec.vocab().hash());
  const auto before = ckpt.content_hash();
  auto recs = testing::small_records(4, 75);
  auto a = evaluate_checkpoint(ckpt, codec, recs, 186);
  auto b = evaluate_checkpoint(ckpt, codec, recs, 186);
  EXPECT_EQ(a.to_json(), b.to_json());
  EXPECT_EQ(ckpt.content_hash(), before);
  auto j = nlohmann::json::parse(a.to_json());
  EXPECT_EQ(j["records"].size(), 4u);
  EXPECT_TRUE(j.contains("micro_cell_accuracy"));

  auto foreign = ckpt;
  foreign.vocab_hash = Vocabulary(9).hash();
  try {
    evaluate_checkpoint(foreign, codec, recs, 186);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kProvenance);
  }
}

}  // namespace
}  // namespace sgrpo
