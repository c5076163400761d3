#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mset/numerics/tensor.hpp"

namespace mset::num {

struct AdamOptions {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamOptions options;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step = 0;

  AdamState() = default;
  AdamState(AdamOptions opts, std::span<const Tensor> params);
};

// One bias-corrected Adam update of every parameter from its accumulated
// gradient. Parameters without a gradient are treated as having zero
// gradient. Throws NumericError naming the offending parameter if any
// gradient entry is NaN or infinite; nothing is modified in that case.
void adam_step(std::span<Tensor> params, AdamState& state);

}  // namespace mset::num
