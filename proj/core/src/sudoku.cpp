#include "sudoku_grpo/sudoku.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

#include "sudoku_grpo/error.hpp"
#include "sudoku_grpo/rng.hpp"

namespace sgrpo {
namespace {

int isqrt_exact(int side) {
  for (int b = 1; b * b <= side; ++b) {
    if (b * b == side) return b;
  }
  return -1;
}

// Row/column/box occupancy as bitmasks (bit v set = value v used).
class Masks {
 public:
  explicit Masks(const Grid& g)
      : side_(g.side()),
        box_(g.box_size()),
        rows_(side_, 0),
        cols_(side_, 0),
        boxes_(side_, 0),
        ok_(true) {
    for (int r = 0; r < side_; ++r) {
      for (int c = 0; c < side_; ++c) {
        int v = g.at(r, c);
        if (v == 0) continue;
        std::uint32_t bit = 1u << v;
        if ((used(r, c) & bit) != 0) ok_ = false;
        place(r, c, v);
      }
    }
  }

  bool consistent() const { return ok_; }

  std::uint32_t used(int r, int c) const { return rows_[r] | cols_[c] | boxes_[box_of(r, c)]; }

  std::uint32_t candidates(int r, int c) const {
    const std::uint32_t all = ((1u << (side_ + 1)) - 1) & ~1u;
    return all & ~used(r, c);
  }

  void place(int r, int c, int v) {
    std::uint32_t bit = 1u << v;
    rows_[r] |= bit;
    cols_[c] |= bit;
    boxes_[box_of(r, c)] |= bit;
  }

  void remove(int r, int c, int v) {
    std::uint32_t bit = ~(1u << v);
    rows_[r] &= bit;
    cols_[c] &= bit;
    boxes_[box_of(r, c)] &= bit;
  }

 private:
  int box_of(int r, int c) const { return (r / box_) * box_ + c / box_; }

  int side_;
  int box_;
  std::vector<std::uint32_t> rows_, cols_, boxes_;
  bool ok_;
};

void check_move_bounds(const Grid& grid, const Move& m) {
  if (m.row < 0 || m.row >= grid.side() || m.col < 0 || m.col >= grid.side()) {
    throw_input("move (" + std::to_string(m.row) + "," + std::to_string(m.col) +
                ") outside a " + std::to_string(grid.side()) + "x" +
                std::to_string(grid.side()) + " grid");
  }
  if (m.val < 1 || m.val > grid.side()) {
    throw_input("move value " + std::to_string(m.val) + " outside [1," +
                std::to_string(grid.side()) + "]");
  }
}

bool reference_search(Grid& g, Masks& masks, Trajectory& out) {
  const int side = g.side();
  int best_r = -1, best_c = -1, best_n = side + 1;
  std::uint32_t best_cand = 0;
  for (int r = 0; r < side && best_n > 0; ++r) {
    for (int c = 0; c < side; ++c) {
      if (g.at(r, c) != 0) continue;
      std::uint32_t cand = masks.candidates(r, c);
      int n = std::popcount(cand);
      if (n < best_n) {
        best_n = n;
        best_r = r;
        best_c = c;
        best_cand = cand;
        if (n == 0) break;
      }
    }
  }
  if (best_r < 0) return true;  // no blanks left
  if (best_n == 0) return false;

  for (int v = 1; v <= side; ++v) {
    if ((best_cand & (1u << v)) == 0) continue;
    g.set(best_r, best_c, v);
    masks.place(best_r, best_c, v);
    out.push_back({best_r, best_c, v});
    if (reference_search(g, masks, out)) return true;
    out.pop_back();
    masks.remove(best_r, best_c, v);
    g.set(best_r, best_c, 0);
  }
  return false;
}

void enumerate(Grid& g, Masks& masks, const std::vector<int>& blanks, std::size_t k,
               std::size_t limit, std::vector<Grid>& out) {
  if (out.size() >= limit) return;
  if (k == blanks.size()) {
    out.push_back(g);
    return;
  }
  const int side = g.side();
  const int r = blanks[k] / side;
  const int c = blanks[k] % side;
  std::uint32_t cand = masks.candidates(r, c);
  for (int v = 1; v <= side && out.size() < limit; ++v) {
    if ((cand & (1u << v)) == 0) continue;
    g.set(r, c, v);
    masks.place(r, c, v);
    enumerate(g, masks, blanks, k + 1, limit, out);
    masks.remove(r, c, v);
    g.set(r, c, 0);
  }
}

bool random_fill(Grid& g, Masks& masks, int k, Rng& rng) {
  const int side = g.side();
  if (k == side * side) return true;
  const int r = k / side;
  const int c = k % side;
  std::vector<int> values(side);
  std::iota(values.begin(), values.end(), 1);
  for (int i = side - 1; i > 0; --i) {
    std::swap(values[i], values[uniform_below(rng, static_cast<std::uint64_t>(i) + 1)]);
  }
  std::uint32_t cand = masks.candidates(r, c);
  for (int v : values) {
    if ((cand & (1u << v)) == 0) continue;
    g.set(r, c, v);
    masks.place(r, c, v);
    if (random_fill(g, masks, k + 1, rng)) return true;
    masks.remove(r, c, v);
    g.set(r, c, 0);
  }
  return false;
}

template <typename T>
void fisher_yates(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[uniform_below(rng, i)]);
  }
}

}  // namespace

Grid::Grid(int side) : side_(side), box_(isqrt_exact(side)) {
  if (side < 1 || box_ < 0 || side > 9) {
    throw_input("grid side must be a perfect square in [1, 9], got " + std::to_string(side));
  }
  cells_.assign(static_cast<std::size_t>(side) * side, 0);
}

Grid Grid::from_string(std::string_view digits, int side) {
  Grid g(side);
  if (digits.size() != static_cast<std::size_t>(side) * side) {
    throw_input("grid string has " + std::to_string(digits.size()) + " cells, expected " +
                std::to_string(side * side));
  }
  for (std::size_t i = 0; i < digits.size(); ++i) {
    char ch = digits[i];
    int v = (ch == '.') ? 0 : ch - '0';
    if (v < 0 || v > side) {
      throw_input(std::string("grid string has invalid cell character '") + ch + "'");
    }
    g.cells_[i] = static_cast<std::uint8_t>(v);
  }
  return g;
}

int Grid::blank_count() const {
  return static_cast<int>(std::count(cells_.begin(), cells_.end(), 0));
}

bool Grid::is_consistent() const { return Masks(*this).consistent(); }

std::string Grid::to_string() const {
  std::string s(cells_.size(), '0');
  for (std::size_t i = 0; i < cells_.size(); ++i) s[i] = static_cast<char>('0' + cells_[i]);
  return s;
}

bool is_valid_placement(const Grid& grid, const Move& move) {
  check_move_bounds(grid, move);
  if (grid.at(move.row, move.col) != 0) return false;
  Masks masks(grid);
  return (masks.used(move.row, move.col) & (1u << move.val)) == 0;
}

Grid apply_trajectory(Grid grid, const Trajectory& moves) {
  for (std::size_t i = 0; i < moves.size(); ++i) {
    if (!is_valid_placement(grid, moves[i])) {
      throw_input("trajectory move " + std::to_string(i) + " is illegal");
    }
    grid.set(moves[i].row, moves[i].col, moves[i].val);
  }
  return grid;
}

Trajectory solve_reference(const Grid& puzzle) {
  Masks masks(puzzle);
  if (!masks.consistent()) throw Error(ErrorKind::kNoSolution, "puzzle givens conflict");
  Grid work = puzzle;
  Trajectory out;
  out.reserve(static_cast<std::size_t>(puzzle.blank_count()));
  if (!reference_search(work, masks, out)) {
    throw Error(ErrorKind::kNoSolution, "puzzle has no solution");
  }
  return out;
}

std::vector<Grid> solve_all(const Grid& puzzle, std::size_t limit) {
  std::vector<Grid> out;
  if (limit == 0) return out;
  Masks masks(puzzle);
  if (!masks.consistent()) return out;
  std::vector<int> blanks;
  for (int i = 0; i < puzzle.cell_count(); ++i) {
    if (puzzle.at(i / puzzle.side(), i % puzzle.side()) == 0) blanks.push_back(i);
  }
  Grid work = puzzle;
  enumerate(work, masks, blanks, 0, limit, out);
  return out;
}

GeneratedPuzzle generate_puzzle(std::uint64_t seed, int target_givens, int side) {
  Rng rng = make_rng(seed, "generate_puzzle");
  Grid full(side);
  Masks masks(full);
  random_fill(full, masks, 0, rng);

  std::vector<int> order(static_cast<std::size_t>(full.cell_count()));
  std::iota(order.begin(), order.end(), 0);
  fisher_yates(order, rng);

  Grid puzzle = full;
  int givens = puzzle.cell_count();
  for (int cell : order) {
    if (givens <= target_givens) break;
    const int r = cell / side;
    const int c = cell % side;
    const int saved = puzzle.at(r, c);
    puzzle.set(r, c, 0);
    if (solve_all(puzzle, 2).size() == 1) {
      --givens;
    } else {
      puzzle.set(r, c, saved);
    }
  }
  return {puzzle, solve_reference(puzzle)};
}

Trajectory shuffle_trajectory(const Trajectory& moves, std::uint64_t seed) {
  Trajectory out = moves;
  Rng rng = make_rng(seed, "shuffle_trajectory");
  fisher_yates(out, rng);
  return out;
}

}  // namespace sgrpo
