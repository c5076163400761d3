#include "mset/hungarian.hpp"

#include <cmath>
#include <limits>

#include "mset/error.hpp"

namespace mset {

namespace {

// Shortest-augmenting-path Hungarian method with potentials on an n×n
// matrix a (row-major), rows are workers. Returns the optimal value and
// worker_of[col] = row.
double solve_square(const std::vector<double>& a, std::size_t n, std::vector<std::size_t>& row_of_col) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  row_of_col.assign(n, 0);
  double total = 0.0;
  for (std::size_t j = 1; j <= n; ++j) {
    row_of_col[j - 1] = p[j] - 1;
    total += a[(p[j] - 1) * n + (j - 1)];
  }
  return total;
}

// Optimal value of the sub-problem over the remaining rows/columns, columns
// padded with zero-cost dummies to a square matrix.
double optimal_value(const CostMatrix& cost, const std::vector<char>& row_free, const std::vector<char>& col_free) {
  std::vector<std::size_t> rows, cols;
  for (std::size_t r = 0; r < cost.rows; ++r)
    if (row_free[r]) rows.push_back(r);
  for (std::size_t c = 0; c < cost.cols; ++c)
    if (col_free[c]) cols.push_back(c);
  if (cols.empty()) return 0.0;
  const std::size_t n = rows.size();
  std::vector<double> a(n * n, 0.0);
  // The solver treats matrix rows as the side to be fully assigned; put
  // ground-truth columns (plus dummies) on that side.
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < n; ++i) a[j * n + i] = cost.at(rows[i], cols[j]);
  std::vector<std::size_t> unused;
  return solve_square(a, n, unused);
}

}  // namespace

std::vector<std::size_t> hungarian(const CostMatrix& cost) {
  if (cost.rows < cost.cols)
    throw CapacityError("hungarian: " + std::to_string(cost.cols) + " ground-truth moments exceed " +
                        std::to_string(cost.rows) + " predictions");
  if (cost.values.size() != cost.rows * cost.cols) throw DimensionError("hungarian: malformed cost matrix");
  std::vector<std::size_t> result(cost.cols);
  if (cost.cols == 0) return result;

  std::vector<char> row_free(cost.rows, 1), col_free(cost.cols, 1);
  const double best = optimal_value(cost, row_free, col_free);
  const double tol = 1e-12 * (1.0 + std::abs(best));

  // Lexicographic refinement: fix each column to the smallest row that
  // still admits an optimal completion.
  double fixed = 0.0;
  for (std::size_t j = 0; j < cost.cols; ++j) {
    col_free[j] = 0;
    bool placed = false;
    for (std::size_t i = 0; i < cost.rows && !placed; ++i) {
      if (!row_free[i]) continue;
      row_free[i] = 0;
      const double candidate = fixed + cost.at(i, j) + optimal_value(cost, row_free, col_free);
      if (candidate <= best + tol) {
        result[j] = i;
        fixed += cost.at(i, j);
        placed = true;
      } else {
        row_free[i] = 1;
      }
    }
    if (!placed) throw NumericError("hungarian: refinement lost the optimum (non-finite costs?)");
  }
  return result;
}

double assignment_cost(const CostMatrix& cost, std::span<const std::size_t> assignment) {
  double total = 0.0;
  for (std::size_t j = 0; j < assignment.size(); ++j) total += cost.at(assignment[j], j);
  return total;
}

}  // namespace mset
