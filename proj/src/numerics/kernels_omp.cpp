#include <algorithm>
#include <cmath>
#include <cstdint>

#include "mset/numerics/kernels.hpp"

#ifdef MSET_HAVE_OPENMP
#include <omp.h>
#endif

namespace mset::num::kernels {

namespace {
int g_threads = 0;

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = std::size_t{1} << 15;

bool go_parallel(std::size_t work) {
#ifdef MSET_HAVE_OPENMP
  return work >= kParallelWork && !omp_in_parallel() && max_threads() > 1;
#else
  (void)work;
  return false;
#endif
}
}  // namespace

void set_threads(int threads) { g_threads = threads; }

int max_threads() {
#ifdef MSET_HAVE_OPENMP
  return g_threads > 0 ? g_threads : omp_get_max_threads();
#else
  return 1;
#endif
}

namespace omp {

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  const auto rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static) num_threads(max_threads())
  for (std::int64_t i = 0; i < rows; ++i) {
    double* ci = c.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      const double* bp = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  const auto rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static) num_threads(max_threads())
  for (std::int64_t i = 0; i < rows; ++i) {
    const double* ai = a.data() + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b.data() + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      c[i * n + j] += acc;
    }
  }
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  const auto rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static) num_threads(max_threads())
  for (std::int64_t i = 0; i < rows; ++i) {
    double* ci = c.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double api = a[p * m + i];
      const double* bp = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

void softmax_rows(std::span<const double> x, std::span<double> y, std::size_t rows, std::size_t cols) {
  const auto nr = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static) num_threads(max_threads())
  for (std::int64_t r = 0; r < nr; ++r) {
    const double* xr = x.data() + r * cols;
    double* yr = y.data() + r * cols;
    const double mx = *std::max_element(xr, xr + cols);
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      total += yr[j];
    }
    for (std::size_t j = 0; j < cols; ++j) yr[j] /= total;
  }
}

void l2_normalize_rows(std::span<const double> x, std::span<double> y, std::span<double> norms,
                       std::size_t rows, std::size_t cols) {
  const auto nr = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static) num_threads(max_threads())
  for (std::int64_t r = 0; r < nr; ++r) {
    const double* xr = x.data() + r * cols;
    double ss = 0.0;
    for (std::size_t j = 0; j < cols; ++j) ss += xr[j] * xr[j];
    const double n = std::sqrt(ss);
    norms[r] = n;
    for (std::size_t j = 0; j < cols; ++j) y[r * cols + j] = xr[j] / n;
  }
}

}  // namespace omp

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  if (go_parallel(m * k * n) && m > 1)
    omp::gemm_nn(a, b, c, m, k, n);
  else
    serial::gemm_nn(a, b, c, m, k, n);
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  if (go_parallel(m * k * n) && m > 1)
    omp::gemm_nt(a, b, c, m, k, n);
  else
    serial::gemm_nt(a, b, c, m, k, n);
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  if (go_parallel(m * k * n) && m > 1)
    omp::gemm_tn(a, b, c, m, k, n);
  else
    serial::gemm_tn(a, b, c, m, k, n);
}

void softmax_rows(std::span<const double> x, std::span<double> y, std::size_t rows, std::size_t cols) {
  if (go_parallel(rows * cols * 8))
    omp::softmax_rows(x, y, rows, cols);
  else
    serial::softmax_rows(x, y, rows, cols);
}

void l2_normalize_rows(std::span<const double> x, std::span<double> y, std::span<double> norms,
                       std::size_t rows, std::size_t cols) {
  if (go_parallel(rows * cols * 4))
    omp::l2_normalize_rows(x, y, norms, rows, cols);
  else
    serial::l2_normalize_rows(x, y, norms, rows, cols);
}

}  // namespace mset::num::kernels
