#include "mset/numerics/ops.hpp"

#include <cmath>
#include <numbers>

#include "mset/error.hpp"
#include "mset/numerics/kernels.hpp"
#include "mset/numerics/tape.hpp"

namespace mset::num {

namespace {

using NodePtr = std::shared_ptr<Node>;

// Builds the op result; it requires grad only if a tape is recording and
// some input requires grad.
Tensor make_result(Shape shape, std::vector<double> data, std::initializer_list<const Tensor*> inputs) {
  bool track = false;
  if (Tape::active())
    for (auto* t : inputs) track = track || t->requires_grad();
  return Tensor(std::move(shape), std::move(data), track);
}

template <typename Rule>
void record(std::vector<NodePtr> inputs, const Tensor& out, Rule rule) {
  if (!out.requires_grad()) return;
  Tape::active()->record(std::move(inputs), out.node(), std::move(rule));
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2)
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
}

enum class Broadcast { None, Left, Right };

Broadcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::None;
  if (a.size() == 1) return Broadcast::Left;
  if (b.size() == 1) return Broadcast::Right;
  throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                       shape_string(b.shape()));
}

template <typename Fwd, typename Dfdx>
Tensor unary(const Tensor& a, Fwd fwd, Dfdx dfdx) {
  std::vector<double> out(a.size());
  const auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(x[i]);
  Tensor y = make_result(a.shape(), std::move(out), {&a});
  auto an = a.node();
  auto yn = y.node();
  record({an}, y, [an, yn, dfdx] {
    an->ensure_grad();
    for (std::size_t i = 0; i < an->value.size(); ++i)
      an->grad[i] += yn->grad[i] * dfdx(an->value[i], yn->value[i]);
  });
  return y;
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k)
    throw DimensionError("matmul: inner dimensions disagree for " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  std::vector<double> out(m * n, 0.0);
  kernels::gemm_nn(a.data(), b.data(), out, m, k, n);
  Tensor y = make_result({m, n}, std::move(out), {&a, &b});
  auto an = a.node(), bn = b.node(), yn = y.node();
  record({an, bn}, y, [an, bn, yn, m, k, n] {
    if (an->requires_grad) {
      an->ensure_grad();
      kernels::gemm_nt(yn->grad, bn->value, an->grad, m, n, k);
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      kernels::gemm_tn(an->value, yn->grad, bn->grad, k, m, n);
    }
  });
  return y;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul_nt");
  require_rank2(b, "matmul_nt");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[0];
  if (b.shape()[1] != k)
    throw DimensionError("matmul_nt: inner dimensions disagree for " + shape_string(a.shape()) +
                         " x " + shape_string(b.shape()) + "^T");
  std::vector<double> out(m * n, 0.0);
  kernels::gemm_nt(a.data(), b.data(), out, m, k, n);
  Tensor y = make_result({m, n}, std::move(out), {&a, &b});
  auto an = a.node(), bn = b.node(), yn = y.node();
  record({an, bn}, y, [an, bn, yn, m, k, n] {
    if (an->requires_grad) {
      an->ensure_grad();
      kernels::gemm_nn(yn->grad, bn->value, an->grad, m, n, k);
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      kernels::gemm_tn(yn->grad, an->value, bn->grad, n, m, k);
    }
  });
  return y;
}

Tensor transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  std::vector<double> out(m * n);
  const auto x = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = x[i * n + j];
  Tensor y = make_result({n, m}, std::move(out), {&a});
  auto an = a.node(), yn = y.node();
  record({an}, y, [an, yn, m, n] {
    an->ensure_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) an->grad[i * n + j] += yn->grad[j * m + i];
  });
  return y;
}

namespace {

// Shared body of add/sub/mul with optional scalar broadcast. da/db return
// the local partials given (a_i, b_i).
template <typename Fwd, typename Da, typename Db>
Tensor binary(const Tensor& a, const Tensor& b, const char* name, Fwd fwd, Da da, Db db) {
  const Broadcast bc = broadcast_kind(a, b, name);
  const Tensor& shape_src = bc == Broadcast::Left ? b : a;
  const std::size_t n = shape_src.size();
  const auto x = a.data();
  const auto z = b.data();
  auto ai = [bc](std::size_t i) { return bc == Broadcast::Left ? std::size_t{0} : i; };
  auto bi = [bc](std::size_t i) { return bc == Broadcast::Right ? std::size_t{0} : i; };
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(x[ai(i)], z[bi(i)]);
  Tensor y = make_result(shape_src.shape(), std::move(out), {&a, &b});
  auto an = a.node(), bn = b.node(), yn = y.node();
  record({an, bn}, y, [an, bn, yn, n, ai, bi, da, db] {
    if (an->requires_grad) an->ensure_grad();
    if (bn->requires_grad) bn->ensure_grad();
    for (std::size_t i = 0; i < n; ++i) {
      const double av = an->value[ai(i)], bv = bn->value[bi(i)], g = yn->grad[i];
      if (an->requires_grad) an->grad[ai(i)] += g * da(av, bv);
      if (bn->requires_grad) bn->grad[bi(i)] += g * db(av, bv);
    }
  });
  return y;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "add", [](double x, double z) { return x + z; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "sub", [](double x, double z) { return x - z; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "mul", [](double x, double z) { return x * z; }, [](double, double z) { return z; },
      [](double x, double) { return x; });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor sigmoid(const Tensor& a) {
  return unary(a, sigmoid_scalar, [](double, double y) { return y * (1.0 - y); });
}

Tensor log(const Tensor& a) {
  for (double v : a.data())
    if (!(v > 0.0)) throw DomainError("log of non-positive entry " + std::to_string(v));
  return unary(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor exp(const Tensor& a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log_sigmoid(const Tensor& a) {
  return unary(
      a, [](double x) { return std::min(x, 0.0) - std::log1p(std::exp(-std::abs(x))); },
      [](double x, double) { return sigmoid_scalar(-x); });
}

Tensor gelu(const Tensor& a) {
  return unary(
      a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); },
      [](double x, double) {
        const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
        const double pdf = std::exp(-0.5 * x * x) * std::numbers::inv_sqrtpi / std::numbers::sqrt2;
        return cdf + x * pdf;
      });
}

Tensor add_row(const Tensor& x, const Tensor& bias) {
  require_rank2(x, "add_row");
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  if (bias.size() != n)
    throw DimensionError("add_row: bias " + shape_string(bias.shape()) + " does not fit rows of " +
                         shape_string(x.shape()));
  std::vector<double> out(x.data().begin(), x.data().end());
  const auto bv = bias.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bv[j];
  Tensor y = make_result(x.shape(), std::move(out), {&x, &bias});
  auto xn = x.node(), bn = bias.node(), yn = y.node();
  record({xn, bn}, y, [xn, bn, yn, m, n] {
    if (xn->requires_grad) {
      xn->ensure_grad();
      for (std::size_t i = 0; i < m * n; ++i) xn->grad[i] += yn->grad[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) bn->grad[j] += yn->grad[i * n + j];
    }
  });
  return y;
}

Tensor softmax_rows(const Tensor& x) {
  const std::size_t n = x.cols(), m = x.size() / n;
  std::vector<double> out(x.size());
  kernels::softmax_rows(x.data(), out, m, n);
  Tensor y = make_result(x.shape(), std::move(out), {&x});
  auto xn = x.node(), yn = y.node();
  record({xn}, y, [xn, yn, m, n] {
    xn->ensure_grad();
    for (std::size_t i = 0; i < m; ++i) {
      const double* yr = yn->value.data() + i * n;
      const double* gr = yn->grad.data() + i * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += gr[j] * yr[j];
      for (std::size_t j = 0; j < n; ++j) xn->grad[i * n + j] += yr[j] * (gr[j] - dot);
    }
  });
  return y;
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const std::size_t n = x.cols(), m = x.size() / n;
  if (gain.size() != n || bias.size() != n)
    throw DimensionError("layer_norm_rows: gain/bias must have " + std::to_string(n) + " entries");
  std::vector<double> xhat(x.size()), inv_std(m), out(x.size());
  const auto xv = x.data();
  const auto gv = gain.data();
  const auto bv = bias.data();
  for (std::size_t i = 0; i < m; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += xv[i * n + j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double c = xv[i * n + j] - mu;
      var += c * c;
    }
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[i * n + j] = (xv[i * n + j] - mu) * inv_std[i];
      out[i * n + j] = xhat[i * n + j] * gv[j] + bv[j];
    }
  }
  Tensor y = make_result(x.shape(), std::move(out), {&x, &gain, &bias});
  auto xn = x.node(), gn = gain.node(), bn = bias.node(), yn = y.node();
  record({xn, gn, bn}, y,
         [xn, gn, bn, yn, m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)] {
           if (gn->requires_grad) gn->ensure_grad();
           if (bn->requires_grad) bn->ensure_grad();
           if (xn->requires_grad) xn->ensure_grad();
           std::vector<double> dxhat(n);
           for (std::size_t i = 0; i < m; ++i) {
             double mean_d = 0.0, mean_dx = 0.0;
             for (std::size_t j = 0; j < n; ++j) {
               const double g = yn->grad[i * n + j];
               if (gn->requires_grad) gn->grad[j] += g * xhat[i * n + j];
               if (bn->requires_grad) bn->grad[j] += g;
               dxhat[j] = g * gn->value[j];
               mean_d += dxhat[j];
               mean_dx += dxhat[j] * xhat[i * n + j];
             }
             if (!xn->requires_grad) continue;
             mean_d /= static_cast<double>(n);
             mean_dx /= static_cast<double>(n);
             for (std::size_t j = 0; j < n; ++j)
               xn->grad[i * n + j] += inv_std[i] * (dxhat[j] - mean_d - xhat[i * n + j] * mean_dx);
           }
         });
  return y;
}

Tensor l2_normalize_rows(const Tensor& x) {
  const std::size_t n = x.cols(), m = x.size() / n;
  std::vector<double> out(x.size()), norms(m);
  kernels::l2_normalize_rows(x.data(), out, norms, m, n);
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(norms[i]))
      throw NumericError("l2_normalize_rows: row " + std::to_string(i) + " is not finite");
    if (norms[i] < 1e-12)
      throw DegenerateVectorError("l2_normalize_rows: row " + std::to_string(i) + " has norm " +
                                  std::to_string(norms[i]));
  }
  Tensor y = make_result(x.shape(), std::move(out), {&x});
  auto xn = x.node(), yn = y.node();
  record({xn}, y, [xn, yn, m, n, norms = std::move(norms)] {
    xn->ensure_grad();
    for (std::size_t i = 0; i < m; ++i) {
      const double* yr = yn->value.data() + i * n;
      const double* gr = yn->grad.data() + i * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += yr[j] * gr[j];
      for (std::size_t j = 0; j < n; ++j) xn->grad[i * n + j] += (gr[j] - yr[j] * dot) / norms[i];
    }
  });
  return y;
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count) {
  require_rank2(x, "slice_cols");
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  if (count == 0 || begin + count > n)
    throw DimensionError("slice_cols: columns [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of " + shape_string(x.shape()));
  std::vector<double> out(m * count);
  const auto xv = x.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < count; ++j) out[i * count + j] = xv[i * n + begin + j];
  Tensor y = make_result({m, count}, std::move(out), {&x});
  auto xn = x.node(), yn = y.node();
  record({xn}, y, [xn, yn, m, n, begin, count] {
    xn->ensure_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < count; ++j) xn->grad[i * n + begin + j] += yn->grad[i * count + j];
  });
  return y;
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count) {
  require_rank2(x, "slice_rows");
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  if (count == 0 || begin + count > m)
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of " + shape_string(x.shape()));
  const auto xv = x.data();
  std::vector<double> out(xv.begin() + begin * n, xv.begin() + (begin + count) * n);
  Tensor y = make_result({count, n}, std::move(out), {&x});
  auto xn = x.node(), yn = y.node();
  record({xn}, y, [xn, yn, n, begin, count] {
    xn->ensure_grad();
    for (std::size_t i = 0; i < count * n; ++i) xn->grad[begin * n + i] += yn->grad[i];
  });
  return y;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t m = parts.front().rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_rank2(p, "concat_cols");
    if (p.shape()[0] != m) throw DimensionError("concat_cols: row counts differ");
    total += p.shape()[1];
  }
  std::vector<double> out(m * total);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.shape()[1];
    const auto pv = p.data();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) out[i * total + offset + j] = pv[i * w + j];
    offset += w;
  }
  bool track = false;
  if (Tape::active())
    for (const auto& p : parts) track = track || p.requires_grad();
  Tensor y({m, total}, std::move(out), track);
  if (track) {
    std::vector<NodePtr> inputs;
    for (const auto& p : parts) inputs.push_back(p.node());
    auto yn = y.node();
    Tape::active()->record(inputs, yn, [inputs, yn, m, total] {
      std::size_t off = 0;
      for (const auto& in : inputs) {
        const std::size_t w = in->shape[1];
        if (in->requires_grad) {
          in->ensure_grad();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < w; ++j) in->grad[i * w + j] += yn->grad[i * total + off + j];
        }
        off += w;
      }
    });
  }
  return y;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_size(shape) != x.size())
    throw DimensionError("reshape: " + shape_string(x.shape()) + " cannot become " + shape_string(shape));
  Tensor y = make_result(std::move(shape), std::vector<double>(x.data().begin(), x.data().end()), {&x});
  auto xn = x.node(), yn = y.node();
  record({xn}, y, [xn, yn] {
    xn->ensure_grad();
    for (std::size_t i = 0; i < yn->grad.size(); ++i) xn->grad[i] += yn->grad[i];
  });
  return y;
}

Tensor lerp_rows(const Tensor& x, std::span<const double> coords) {
  require_rank2(x, "lerp_rows");
  const std::size_t m = x.shape()[0], n = x.shape()[1], k = coords.size();
  if (k == 0) throw DimensionError("lerp_rows: no coordinates");
  std::vector<std::size_t> lo(k), hi(k);
  std::vector<double> frac(k);
  for (std::size_t r = 0; r < k; ++r) {
    const double c = coords[r];
    if (!(c >= 0.0) || c > static_cast<double>(m - 1))
      throw RangeError("lerp_rows: coordinate " + std::to_string(c) + " outside [0, " +
                       std::to_string(m - 1) + "]");
    lo[r] = static_cast<std::size_t>(std::floor(c));
    hi[r] = static_cast<std::size_t>(std::ceil(c));
    frac[r] = c - static_cast<double>(lo[r]);
  }
  std::vector<double> out(k * n);
  const auto xv = x.data();
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t j = 0; j < n; ++j)
      out[r * n + j] = (1.0 - frac[r]) * xv[lo[r] * n + j] + frac[r] * xv[hi[r] * n + j];
  Tensor y = make_result({k, n}, std::move(out), {&x});
  auto xn = x.node(), yn = y.node();
  record({xn}, y, [xn, yn, n, k, lo = std::move(lo), hi = std::move(hi), frac = std::move(frac)] {
    xn->ensure_grad();
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t j = 0; j < n; ++j) {
        const double g = yn->grad[r * n + j];
        xn->grad[lo[r] * n + j] += (1.0 - frac[r]) * g;
        xn->grad[hi[r] * n + j] += frac[r] * g;
      }
  });
  return y;
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  Tensor y = make_result({1}, {total}, {&x});
  auto xn = x.node(), yn = y.node();
  record({xn}, y, [xn, yn] {
    xn->ensure_grad();
    for (auto& g : xn->grad) g += yn->grad[0];
  });
  return y;
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

}  // namespace mset::num
