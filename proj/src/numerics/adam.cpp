#include "mset/numerics/adam.hpp"

#include <cmath>

#include "mset/error.hpp"

namespace mset::num {

AdamState::AdamState(AdamOptions opts, std::span<const Tensor> params) : options(opts) {
  first_moment.reserve(params.size());
  second_moment.reserve(params.size());
  for (const auto& p : params) {
    first_moment.emplace_back(p.size(), 0.0);
    second_moment.emplace_back(p.size(), 0.0);
  }
}

void adam_step(std::span<Tensor> params, AdamState& state) {
  if (params.size() != state.first_moment.size())
    throw DimensionError("adam_step: optimizer state tracks " + std::to_string(state.first_moment.size()) +
                         " parameters, got " + std::to_string(params.size()));
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (state.first_moment[p].size() != params[p].size())
      throw DimensionError("adam_step: moment shape mismatch for parameter " + std::to_string(p));
    if (!params[p].has_grad()) continue;
    const auto g = params[p].grad();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (!std::isfinite(g[i]))
        throw NumericError("adam_step: non-finite gradient " + std::to_string(g[i]) + " in parameter " +
                           std::to_string(p) + " entry " + std::to_string(i) + " at step " +
                           std::to_string(state.step + 1));
  }

  const auto& o = state.options;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& m = state.first_moment[p];
    auto& v = state.second_moment[p];
    auto x = params[p].mutable_data();
    const bool has = params[p].has_grad();
    const auto g = params[p].grad();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double gi = has ? g[i] : 0.0;
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * gi;
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * gi * gi;
      x[i] -= o.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + o.epsilon);
    }
  }
}

}  // namespace mset::num
