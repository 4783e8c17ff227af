#pragma once

#include <utility>
#include <vector>

namespace nightwatch {

/// Rectangular cost matrix for bipartite assignment. Rows are detections,
/// columns are candidate matches. Entries are nonnegative finite costs
/// (meters) or FORBIDDEN (gated out).
class CostMatrix {
 public:
  CostMatrix(int rows, int cols);

  void set(int row, int col, double cost);  // cost must be finite and >= 0
  void set_forbidden(int row, int col);

  bool is_forbidden(int row, int col) const { return cell(row, col) < 0.0; }
  double at(int row, int col) const;  // throws on forbidden cells

  int rows() const { return rows_; }
  int cols() const { return cols_; }

 private:
  double cell(int row, int col) const {
    return cells_[static_cast<size_t>(row) * cols_ + col];
  }
  int rows_;
  int cols_;
  std::vector<double> cells_;  // negative sentinel = forbidden
};

struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (row, col), sorted by row
  std::vector<int> unmatched_rows;
  std::vector<int> unmatched_cols;
  double total_cost = 0.0;  // sum of matched entries in row order

  int cardinality() const { return static_cast<int>(pairs.size()); }
};

/// Minimum-weight bipartite matching via Jonker-Volgenant-style shortest
/// augmenting paths. Maximizes feasible cardinality first, then minimizes
/// total cost; rows with no feasible column are reported unmatched rather
/// than raising. Deterministic: rows are augmented in ascending index and
/// column ties resolve to the lowest index.
Assignment solve_lap(const CostMatrix& costs);

/// Exhaustive oracle with the same contract (and a lexicographically
/// smallest optimal pair list). Throws ConfigError when min(rows, cols) > 8.
Assignment brute_force_lap(const CostMatrix& costs);

}  // namespace nightwatch
