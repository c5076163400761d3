#pragma once

// Test-only helpers: random tensors and a central finite-difference oracle
// that never touches the tape.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "mset/numerics/tape.hpp"
#include "mset/numerics/tensor.hpp"

namespace mset::testing {

inline num::Tensor random_tensor(num::Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0,
                                 bool requires_grad = true) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> data(num::shape_size(shape));
  for (auto& v : data) v = u(rng);
  return num::Tensor(std::move(shape), std::move(data), requires_grad);
}

// |a − n| / max(|a|, |n|, floor). The floor keeps gradients that vanish
// identically (attention key biases) from dividing round-off by zero.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Central difference of f w.r.t. entry `index` of `param`, evaluated with no tape.
inline double central_difference(const std::function<double()>& f, num::Tensor& param, std::size_t index,
                                 double h = 1e-5) {
  num::NoGradScope no_grad;
  auto data = param.mutable_data();
  const double saved = data[index];
  data[index] = saved + h;
  const double up = f();
  data[index] = saved - h;
  const double down = f();
  data[index] = saved;
  return (up - down) / (2.0 * h);
}

// Runs loss() under a fresh tape and returns the analytic gradient of every
// entry of `param`.
inline std::vector<double> analytic_gradient(const std::function<num::Tensor()>& loss, num::Tensor& param) {
  param.zero_grad();
  num::Tape tape;
  num::Tensor l;
  {
    num::TapeScope scope(tape);
    l = loss();
  }
  tape.backward(l);
  if (!param.has_grad()) return std::vector<double>(param.size(), 0.0);
  return {param.grad().begin(), param.grad().end()};
}

// Worst relative error between analytic and central-difference gradients
// over every entry of every listed parameter.
inline double max_gradient_error(const std::function<num::Tensor()>& loss, std::vector<num::Tensor> params,
                                 double h = 1e-5) {
  double worst = 0.0;
  for (auto& p : params) {
    const auto g = analytic_gradient(loss, p);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double fd = central_difference([&] { return loss().item(); }, p, i, h);
      worst = std::max(worst, relative_error(g[i], fd));
    }
  }
  return worst;
}

}  // namespace mset::testing
