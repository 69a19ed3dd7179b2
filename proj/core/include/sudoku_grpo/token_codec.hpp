#pragma once

#include <span>
#include <string>
#include <vector>

#include "sudoku_grpo/dataset.hpp"
#include "sudoku_grpo/sudoku.hpp"

namespace sgrpo {

using TokenId = int;

enum class Order { kSolver, kRandom };

std::string_view order_name(Order order);
Order parse_order(std::string_view name);

// PAD, BOS, SEP, EOS, then digit tokens "0".."side" shared by rows, columns,
// and values.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kSep = 2;
  static constexpr TokenId kEos = 3;
  static constexpr TokenId kFirstDigit = 4;

  explicit Vocabulary(int side = 9) : side_(side) {}

  int side() const { return side_; }
  int size() const { return kFirstDigit + side_ + 1; }

  TokenId digit(int d) const { return kFirstDigit + d; }
  // Digit value of `id`, or -1 if it is not a digit token.
  int digit_value(TokenId id) const {
    return (id >= kFirstDigit && id < size()) ? id - kFirstDigit : -1;
  }

  std::string token_text(TokenId id) const;

  // "id<TAB>token" per line, in id order.
  std::string dump() const;
  std::string hash() const;

 private:
  int side_;
};

struct TokenSequence {
  std::vector<TokenId> ids;
  std::vector<bool> loss_mask;  // true where ids[t] is a training target
  int prompt_len = 0;           // index just after SEP
  int length = 0;               // tokens before padding (through EOS)
};

class TokenCodec {
 public:
  // max_len <= 0 selects the natural length 3*side^2 + 3, which every record
  // of that side fits exactly (prompt + completion).
  explicit TokenCodec(int side = 9, int max_len = 0);

  const Vocabulary& vocab() const { return vocab_; }
  int side() const { return vocab_.side(); }
  int max_len() const { return max_len_; }

  // BOS, givens as row-major (row, col, val) triplets, SEP.
  std::vector<TokenId> encode_prompt(const Grid& puzzle) const;

  // Prompt, the chosen trajectory's triplets, EOS, then PAD to max_len.
  TokenSequence encode(const PuzzleRecord& record, Order order) const;

  // Triplets then EOS, without prompt or padding.
  std::vector<TokenId> encode_moves(const Trajectory& moves) const;

  // Total parser for generated tokens: stops at EOS or end of input, drops
  // out-of-range triplets and repeated cells (first occurrence wins).
  Trajectory decode_completion(std::span<const TokenId> ids) const;

 private:
  Vocabulary vocab_;
  int max_len_;
};

}  // namespace sgrpo
