#include <gtest/gtest.h>

#include <random>
#include <set>

#include "sudoku_grpo/error.hpp"
#include "sudoku_grpo/token_codec.hpp"
#include "unit/test_util.hpp"

namespace sgrpo {
namespace {

PuzzleRecord record_with_blanks(int blanks, std::uint64_t seed) {
  auto gen = generate_puzzle(seed, 81 - blanks);
  return {"r", gen.puzzle, gen.solver_order, shuffle_trajectory(gen.solver_order, seed), Split::kTrain};
}

TEST(Vocabulary, DenseIdsWithPadZero) {
  Vocabulary v(9);
  EXPECT_EQ(Vocabulary::kPad, 0);
  EXPECT_EQ(v.size(), 14);
  EXPECT_EQ(v.digit_value(v.digit(0)), 0);
  EXPECT_EQ(v.digit_value(v.digit(9)), 9);
  EXPECT_EQ(v.digit_value(Vocabulary::kEos), -1);
  EXPECT_EQ(v.token_text(Vocabulary::kSep), "<sep>");
  EXPECT_NE(Vocabulary(9).hash(), Vocabulary(4).hash());
  EXPECT_EQ(Vocabulary(4).size(), 9);
}

TEST(Encode, LayoutAndMask) {
  TokenCodec codec(9);
  auto rec = record_with_blanks(40, 3);
  auto seq = codec.encode(rec, Order::kSolver);
  EXPECT_EQ(seq.ids.front(), Vocabulary::kBos);
  EXPECT_EQ(seq.ids[static_cast<std::size_t>(seq.prompt_len - 1)], Vocabulary::kSep);
  EXPECT_EQ(seq.prompt_len, 3 * 41 + 2);
  EXPECT_EQ(seq.length, seq.prompt_len + 3 * 40 + 1);
  EXPECT_EQ(seq.ids[static_cast<std::size_t>(seq.length - 1)], Vocabulary::kEos);
  EXPECT_EQ(static_cast<int>(seq.ids.size()), codec.max_len());
  for (int t = 0; t < codec.max_len(); ++t) {
    const bool in_solution = t >= seq.prompt_len && t < seq.length;
    EXPECT_EQ(seq.loss_mask[static_cast<std::size_t>(t)], in_solution) << t;
    if (t >= seq.length) EXPECT_EQ(seq.ids[static_cast<std::size_t>(t)], Vocabulary::kPad);
  }
}

TEST(Encode, NoBlanksGivesEosOnly) {
  auto gen = generate_puzzle(4, 81);
  PuzzleRecord rec{"full", apply_trajectory(gen.puzzle, gen.solver_order), {}, {}, Split::kTest};
  TokenCodec codec(9);
  auto seq = codec.encode(rec, Order::kRandom);
  EXPECT_EQ(seq.length - seq.prompt_len, 1);
  EXPECT_EQ(seq.ids[static_cast<std::size_t>(seq.prompt_len)], Vocabulary::kEos);
  int n_mask = 0;
  for (bool m : seq.loss_mask) n_mask += m ? 1 : 0;
  EXPECT_EQ(n_mask, 1);
}

TEST(Encode, SixtyTwoBlanksMatchGenerationBudget) {
  // Forcing 62 blanks needs a puzzle with 19 givens; the generator may stop
  // above that, so build the record by blanking a solved grid directly.
  auto gen = generate_puzzle(8, 30);
  Grid solved = apply_trajectory(gen.puzzle, gen.solver_order);
  Grid puzzle = solved;
  int blanks = 0;
  for (int i = 0; i < 81 && blanks < 62; ++i) {
    puzzle.set(i / 9, i % 9, 0);
    ++blanks;
  }
  Trajectory moves;
  for (int i = 0; i < 62; ++i) moves.push_back({i / 9, i % 9, solved.at(i / 9, i % 9)});
  PuzzleRecord rec{"wide", puzzle, moves, moves, Split::kTrain};
  TokenCodec codec(9);
  auto seq = codec.encode(rec, Order::kSolver);
  EXPECT_EQ(seq.length - seq.prompt_len, 62 * 3 + 1);
  EXPECT_EQ(62 * 3, 186);
}

TEST(Encode, OverLongSequenceIsError) {
  TokenCodec codec(9, 50);
  auto rec = record_with_blanks(40, 1);
  EXPECT_THROW(codec.encode(rec, Order::kSolver), Error);
}

TEST(DecodeCompletion, RoundTripsEncodedSolution) {
  TokenCodec codec(9);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto rec = record_with_blanks(45, seed);
    for (Order o : {Order::kSolver, Order::kRandom}) {
      auto seq = codec.encode(rec, o);
      std::span<const TokenId> tail(seq.ids.data() + seq.prompt_len,
                                    static_cast<std::size_t>(codec.max_len() - seq.prompt_len));
      EXPECT_EQ(codec.decode_completion(tail),
                o == Order::kSolver ? rec.solver_order : rec.random_order);
    }
  }
}

TEST(DecodeCompletion, WellFormedThreeTriplets) {
  TokenCodec codec(9);
  auto ids = codec.encode_moves({{0, 0, 1}, {1, 1, 2}, {2, 2, 3}});
  EXPECT_EQ(codec.decode_completion(ids).size(), 3u);
}

TEST(DecodeCompletion, DuplicateCellFirstWins) {
  TokenCodec codec(9);
  auto ids = codec.encode_moves({{0, 0, 1}, {0, 0, 7}, {3, 4, 5}});
  Trajectory expect{{0, 0, 1}, {3, 4, 5}};
  EXPECT_EQ(codec.decode_completion(ids), expect);
}

TEST(DecodeCompletion, StopsAtStrayEos) {
  TokenCodec codec(9);
  const auto& v = codec.vocab();
  std::vector<TokenId> ids{v.digit(1), v.digit(2), v.digit(3), Vocabulary::kEos,
                           v.digit(4), v.digit(5), v.digit(6)};
  EXPECT_EQ(codec.decode_completion(ids).size(), 1u);
  // EOS inside a triplet also ends parsing.
  std::vector<TokenId> mid{v.digit(1), v.digit(2), v.digit(3), v.digit(4), Vocabulary::kEos, v.digit(6)};
  EXPECT_EQ(codec.decode_completion(mid).size(), 1u);
}

TEST(DecodeCompletion, DropsOutOfRangeTriplets) {
  TokenCodec codec(4);
  const auto& v = codec.vocab();
  // row 4 is out of range on 4x4; value 0 is not a placement; SEP is not a digit.
  std::vector<TokenId> ids{v.digit(4), v.digit(0), v.digit(1), v.digit(0), v.digit(0), v.digit(0),
                           Vocabulary::kSep, v.digit(0), v.digit(1), v.digit(3), v.digit(3), v.digit(4),
                           v.digit(1)};
  Trajectory expect{{3, 3, 4}};
  EXPECT_EQ(codec.decode_completion(ids), expect);
}

TEST(DecodeCompletion, TotalOnArbitraryIds) {
  TokenCodec codec(9);
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<TokenId> ids(rng() % 200);
    for (auto& id : ids) id = static_cast<TokenId>(rng() % 20) - 3;  // includes invalid ids
    Trajectory out;
    ASSERT_NO_THROW(out = codec.decode_completion(ids));
    std::set<std::pair<int, int>> cells;
    for (const Move& m : out) {
      EXPECT_TRUE(m.row >= 0 && m.row < 9 && m.col >= 0 && m.col < 9 && m.val >= 1 && m.val <= 9);
      EXPECT_TRUE(cells.insert({m.row, m.col}).second);
    }
  }
}

}  // namespace
}  // namespace sgrpo
