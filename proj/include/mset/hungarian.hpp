#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mset {

// rows = predictions (N), cols = ground truth (M); row-major.
struct CostMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

// Minimum-cost injective map from columns to rows: result[j] is the row
// assigned to column j. Among optimal assignments the lexicographically
// smallest (by result[0], result[1], ...) is returned. CapacityError if
// rows < cols.
std::vector<std::size_t> hungarian(const CostMatrix& cost);

// Σ_j cost(result[j], j), accumulated in column order.
double assignment_cost(const CostMatrix& cost, std::span<const std::size_t> assignment);

}  // namespace mset
