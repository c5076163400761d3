#pragma once

// Dense row-major kernels. The serial namespace is the reference
// implementation; the omp namespace distributes output rows across threads
// and produces bit-identical results because every output entry is reduced
// by one thread in the same order as the serial loop.

#include <cstddef>
#include <span>

namespace mset::num::kernels {

namespace serial {

// c[m×n] += a[m×k] · b[k×n]
void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
// c[m×n] += a[m×k] · b[n×k]ᵀ
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
// c[m×n] += a[k×m]ᵀ · b[k×n]
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
void softmax_rows(std::span<const double> x, std::span<double> y, std::size_t rows, std::size_t cols);
// y = x / ‖x‖ per row; norms receives each row's norm.
void l2_normalize_rows(std::span<const double> x, std::span<double> y, std::span<double> norms,
                       std::size_t rows, std::size_t cols);

}  // namespace serial

namespace omp {

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
void softmax_rows(std::span<const double> x, std::span<double> y, std::size_t rows, std::size_t cols);
void l2_normalize_rows(std::span<const double> x, std::span<double> y, std::span<double> norms,
                       std::size_t rows, std::size_t cols);

}  // namespace omp

// Dispatchers used by the ops layer: OpenMP variants above a work
// threshold, serial otherwise or when already inside a parallel region.
void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
void softmax_rows(std::span<const double> x, std::span<double> y, std::size_t rows, std::size_t cols);
void l2_normalize_rows(std::span<const double> x, std::span<double> y, std::span<double> norms,
                       std::size_t rows, std::size_t cols);

// Thread count used by the omp variants (0 = runtime default).
void set_threads(int threads);
int max_threads();

}  // namespace mset::num::kernels
