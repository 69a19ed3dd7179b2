#include "sudoku_grpo/token_codec.hpp"

#include <sstream>

#include "sudoku_grpo/error.hpp"
#include "sudoku_grpo/hash.hpp"

namespace sgrpo {

std::string_view order_name(Order order) {
  return order == Order::kSolver ? "solver" : "random";
}

Order parse_order(std::string_view name) {
  if (name == "solver") return Order::kSolver;
  if (name == "random") return Order::kRandom;
  throw_input("unknown order '" + std::string(name) + "' (expected solver|random)");
}

std::string Vocabulary::token_text(TokenId id) const {
  switch (id) {
    case kPad: return "<pad>";
    case kBos: return "<bos>";
    case kSep: return "<sep>";
    case kEos: return "<eos>";
    default: break;
  }
  int d = digit_value(id);
  if (d < 0) return "<unk>";
  return std::to_string(d);
}

std::string Vocabulary::dump() const {
  std::ostringstream out;
  for (TokenId id = 0; id < size(); ++id) out << id << '\t' << token_text(id) << '\n';
  return out.str();
}

std::string Vocabulary::hash() const { return sha256_hex(dump()); }

TokenCodec::TokenCodec(int side, int max_len)
    : vocab_(side), max_len_(max_len > 0 ? max_len : 3 * side * side + 3) {}

std::vector<TokenId> TokenCodec::encode_prompt(const Grid& puzzle) const {
  if (puzzle.side() != side()) throw_input("puzzle side does not match codec side");
  std::vector<TokenId> ids;
  ids.reserve(static_cast<std::size_t>(3 * puzzle.given_count() + 2));
  ids.push_back(Vocabulary::kBos);
  for (int r = 0; r < side(); ++r) {
    for (int c = 0; c < side(); ++c) {
      int v = puzzle.at(r, c);
      if (v == 0) continue;
      ids.push_back(vocab_.digit(r));
      ids.push_back(vocab_.digit(c));
      ids.push_back(vocab_.digit(v));
    }
  }
  ids.push_back(Vocabulary::kSep);
  return ids;
}

std::vector<TokenId> TokenCodec::encode_moves(const Trajectory& moves) const {
  std::vector<TokenId> ids;
  ids.reserve(moves.size() * 3 + 1);
  for (const Move& m : moves) {
    ids.push_back(vocab_.digit(m.row));
    ids.push_back(vocab_.digit(m.col));
    ids.push_back(vocab_.digit(m.val));
  }
  ids.push_back(Vocabulary::kEos);
  return ids;
}

TokenSequence TokenCodec::encode(const PuzzleRecord& record, Order order) const {
  const Trajectory& moves = order == Order::kSolver ? record.solver_order : record.random_order;
  TokenSequence seq;
  seq.ids = encode_prompt(record.puzzle);
  seq.prompt_len = static_cast<int>(seq.ids.size());
  auto tail = encode_moves(moves);
  seq.ids.insert(seq.ids.end(), tail.begin(), tail.end());
  seq.length = static_cast<int>(seq.ids.size());
  if (seq.length > max_len_) {
    throw_input("record " + record.id + " encodes to " + std::to_string(seq.length) +
                " tokens, above max length " + std::to_string(max_len_));
  }
  seq.loss_mask.assign(static_cast<std::size_t>(max_len_), false);
  for (int t = seq.prompt_len; t < seq.length; ++t) seq.loss_mask[t] = true;
  seq.ids.resize(static_cast<std::size_t>(max_len_), Vocabulary::kPad);
  return seq;
}

Trajectory TokenCodec::decode_completion(std::span<const TokenId> ids) const {
  Trajectory out;
  std::vector<bool> seen(static_cast<std::size_t>(side()) * side(), false);
  for (std::size_t i = 0; i < ids.size(); i += 3) {
    // EOS anywhere in the group ends parsing, including a partial triplet.
    bool eos = false;
    for (std::size_t k = i; k < i + 3 && k < ids.size(); ++k) {
      if (ids[k] == Vocabulary::kEos) eos = true;
    }
    if (eos || i + 3 > ids.size()) break;
    int r = vocab_.digit_value(ids[i]);
    int c = vocab_.digit_value(ids[i + 1]);
    int v = vocab_.digit_value(ids[i + 2]);
    if (r < 0 || r >= side() || c < 0 || c >= side() || v < 1 || v > side()) continue;
    auto cell = static_cast<std::size_t>(r * side() + c);
    if (seen[cell]) continue;
    seen[cell] = true;
    out.push_back({r, c, v});
  }
  return out;
}

}  // namespace sgrpo
