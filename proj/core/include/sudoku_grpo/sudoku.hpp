#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sgrpo {

// One placement: 0-based row and column, value in [1, side].
struct Move {
  int row = 0;
  int col = 0;
  int val = 0;

  friend auto operator<=>(const Move&, const Move&) = default;
};

// Ordered placements. No cell repeats; replaying onto the originating puzzle
// never violates a constraint.
using Trajectory = std::vector<Move>;

// An n^2 x n^2 board. Cells hold 0 for blank or a value in [1, side].
class Grid {
 public:
  explicit Grid(int side = 9);

  // Parses a row-major digit string of length side*side ('0' = blank).
  static Grid from_string(std::string_view digits, int side = 9);

  int side() const { return side_; }
  int box_size() const { return box_; }
  int cell_count() const { return side_ * side_; }

  int at(int row, int col) const { return cells_[index(row, col)]; }
  void set(int row, int col, int val) { cells_[index(row, col)] = static_cast<std::uint8_t>(val); }

  int blank_count() const;
  int given_count() const { return cell_count() - blank_count(); }
  bool is_complete() const { return blank_count() == 0; }

  // True when no nonzero value repeats in any row, column, or box.
  bool is_consistent() const;

  std::string to_string() const;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int index(int row, int col) const { return row * side_ + col; }

  int side_;
  int box_;
  std::vector<std::uint8_t> cells_;
};

// True iff the cell is blank and `move.val` conflicts with nothing in its
// row, column, or box. Throws an input error for out-of-range indices/values.
bool is_valid_placement(const Grid& grid, const Move& move);

// Applies moves in order; throws an input error on the first illegal move.
Grid apply_trajectory(Grid grid, const Trajectory& moves);

// Deterministic solver defining "solver order": always fill the blank with
// the fewest candidates (ties row-major), branching depth-first over
// ascending values when that minimum exceeds one. Only moves on the
// successful branch are recorded. Throws ErrorKind::kNoSolution.
Trajectory solve_reference(const Grid& puzzle);

// Exhaustive backtracking in row-major cell order with ascending values.
// Returns up to `limit` complete solutions in that enumeration order.
std::vector<Grid> solve_all(const Grid& puzzle, std::size_t limit);

struct GeneratedPuzzle {
  Grid puzzle;
  Trajectory solver_order;
};

// Randomized full grid, then seeded cell removals that keep the solution
// unique, stopping at `target_givens` or when no removal is possible.
GeneratedPuzzle generate_puzzle(std::uint64_t seed, int target_givens, int side = 9);

// Seeded uniform (Fisher-Yates) permutation of the moves.
Trajectory shuffle_trajectory(const Trajectory& moves, std::uint64_t seed);

}  // namespace sgrpo
