#include "nightwatch/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nightwatch/errors.hpp"

namespace nightwatch {

namespace {
constexpr double kForbiddenSentinel = -1.0;
constexpr double kInf = std::numeric_limits<double>::infinity();

double row_ordered_total(const CostMatrix& costs, const std::vector<std::pair<int, int>>& pairs) {
  double total = 0.0;
  for (const auto& [r, c] : pairs) total += costs.at(r, c);
  return total;
}

void fill_unmatched(const CostMatrix& costs, Assignment& out) {
  std::vector<char> row_used(static_cast<size_t>(costs.rows()), 0);
  std::vector<char> col_used(static_cast<size_t>(costs.cols()), 0);
  for (const auto& [r, c] : out.pairs) {
    row_used[static_cast<size_t>(r)] = 1;
    col_used[static_cast<size_t>(c)] = 1;
  }
  for (int r = 0; r < costs.rows(); ++r)
    if (!row_used[static_cast<size_t>(r)]) out.unmatched_rows.push_back(r);
  for (int c = 0; c < costs.cols(); ++c)
    if (!col_used[static_cast<size_t>(c)]) out.unmatched_cols.push_back(c);
}

}  // namespace

CostMatrix::CostMatrix(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) throw ConfigError("cost matrix dimensions must be >= 0");
  cells_.assign(static_cast<size_t>(rows) * static_cast<size_t>(cols), kForbiddenSentinel);
}

void CostMatrix::set(int row, int col, double cost) {
  if (!(std::isfinite(cost) && cost >= 0.0))
    throw ConfigError("cost entries must be finite and >= 0, got " + std::to_string(cost));
  cells_[static_cast<size_t>(row) * cols_ + col] = cost;
}

void CostMatrix::set_forbidden(int row, int col) {
  cells_[static_cast<size_t>(row) * cols_ + col] = kForbiddenSentinel;
}

double CostMatrix::at(int row, int col) const {
  const double v = cell(row, col);
  if (v < 0.0) throw Error("cost entry (" + std::to_string(row) + "," + std::to_string(col) +
                           ") is forbidden");
  return v;
}

Assignment solve_lap(const CostMatrix& costs) {
  const int n = costs.rows();
  const int m = costs.cols();
  Assignment out;
  if (n == 0 || m == 0) {
    fill_unmatched(costs, out);
    return out;
  }

  // Pad to square. Forbidden entries get a cost strictly dominating any
  // feasible total so the optimizer uses them only when a row has no
  // feasible alternative: cardinality is maximized first, cost second.
  const int s = std::max(n, m);
  double finite_sum = 0.0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < m; ++c)
      if (!costs.is_forbidden(r, c)) finite_sum += costs.at(r, c);
  const double big = 1.0 + finite_sum;

  const auto padded = [&](int r, int c) -> double {
    if (r < n && c < m) return costs.is_forbidden(r, c) ? big : costs.at(r, c);
    return 0.0;  // dummy row/col absorbs the rectangle surplus
  };

  // Shortest augmenting path with potentials; column index 0 is the phantom
  // start column, real columns are 1..s, rows stored 1-based (0 = free).
  std::vector<double> u(static_cast<size_t>(s) + 1, 0.0);
  std::vector<double> v(static_cast<size_t>(s) + 1, 0.0);
  std::vector<int> match(static_cast<size_t>(s) + 1, 0);  // col -> row (1-based)
  std::vector<int> way(static_cast<size_t>(s) + 1, 0);

  for (int i = 1; i <= s; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<size_t>(s) + 1, kInf);
    std::vector<char> used(static_cast<size_t>(s) + 1, 0);
    do {
      used[static_cast<size_t>(j0)] = 1;
      const int i0 = match[static_cast<size_t>(j0)];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= s; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        const double cur = padded(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
        if (cur < minv[static_cast<size_t>(j)]) {
          minv[static_cast<size_t>(j)] = cur;
          way[static_cast<size_t>(j)] = j0;
        }
        if (minv[static_cast<size_t>(j)] < delta) {  // strict: lowest column wins ties
          delta = minv[static_cast<size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= s; ++j) {
        if (used[static_cast<size_t>(j)]) {
          u[static_cast<size_t>(match[static_cast<size_t>(j)])] += delta;
          v[static_cast<size_t>(j)] -= delta;
        } else {
          minv[static_cast<size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<size_t>(j0)];
      match[static_cast<size_t>(j0)] = match[static_cast<size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  for (int j = 1; j <= s; ++j) {
    const int row = match[static_cast<size_t>(j)] - 1;
    const int col = j - 1;
    if (row < n && col < m && !costs.is_forbidden(row, col))
      out.pairs.emplace_back(row, col);
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  out.total_cost = row_ordered_total(costs, out.pairs);
  fill_unmatched(costs, out);
  return out;
}

namespace {

struct BruteState {
  const CostMatrix* costs;
  bool transposed;  // recursion runs over the smaller side
  int depth_size;   // rows of the (possibly transposed) view
  int other_size;
  std::vector<char> col_used;
  std::vector<std::pair<int, int>> current;
  double current_cost = 0.0;
  bool have_best = false;
  std::vector<std::pair<int, int>> best;
  double best_cost = 0.0;

  double view_cost(int r, int c) const {
    return transposed ? costs->at(c, r) : costs->at(r, c);
  }
  bool view_forbidden(int r, int c) const {
    return transposed ? costs->is_forbidden(c, r) : costs->is_forbidden(r, c);
  }

  void consider_leaf() {
    const int card = static_cast<int>(current.size());
    const int best_card = static_cast<int>(best.size());
    if (have_best) {
      if (card < best_card) return;
      if (card == best_card) {
        if (current_cost > best_cost) return;
        if (current_cost == best_cost && current >= best) return;
      }
    }
    have_best = true;
    best = current;
    best_cost = current_cost;
  }

  void recurse(int row) {
    if (have_best) {
      // Cardinality cannot exceed current + remaining rows; prune hopeless
      // branches, and cost-prune when cardinality can at best tie.
      const int potential = static_cast<int>(current.size()) + (depth_size - row);
      const int best_card = static_cast<int>(best.size());
      if (potential < best_card) return;
      if (potential == best_card && current_cost > best_cost) return;
    }
    if (row == depth_size) {
      consider_leaf();
      return;
    }
    for (int c = 0; c < other_size; ++c) {
      if (col_used[static_cast<size_t>(c)] || view_forbidden(row, c)) continue;
      col_used[static_cast<size_t>(c)] = 1;
      current.emplace_back(row, c);
      current_cost += view_cost(row, c);
      recurse(row + 1);
      current_cost -= view_cost(row, c);
      current.pop_back();
      col_used[static_cast<size_t>(c)] = 0;
    }
    recurse(row + 1);  // leave this row unmatched
  }
};

}  // namespace

Assignment brute_force_lap(const CostMatrix& costs) {
  const int n = costs.rows();
  const int m = costs.cols();
  if (std::min(n, m) > 8)
    throw ConfigError("brute_force_lap supports min(rows, cols) <= 8, got " +
                      std::to_string(std::min(n, m)));
  Assignment out;
  if (n == 0 || m == 0) {
    fill_unmatched(costs, out);
    return out;
  }

  BruteState st;
  st.costs = &costs;
  st.transposed = n > m;
  st.depth_size = st.transposed ? m : n;
  st.other_size = st.transposed ? n : m;
  st.col_used.assign(static_cast<size_t>(st.other_size), 0);
  st.recurse(0);

  for (const auto& [r, c] : st.best)
    out.pairs.emplace_back(st.transposed ? c : r, st.transposed ? r : c);
  std::sort(out.pairs.begin(), out.pairs.end());
  out.total_cost = row_ordered_total(costs, out.pairs);
  fill_unmatched(costs, out);
  return out;
}

}  // namespace nightwatch
