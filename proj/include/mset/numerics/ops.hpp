#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mset/numerics/tensor.hpp"

namespace mset::num {

// Matrix products on rank-2 tensors.
Tensor matmul(const Tensor& a, const Tensor& b);     // a[m×k] · b[k×n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a[m×k] · b[n×k]ᵀ
Tensor transpose(const Tensor& a);

// Elementwise. Binary ops take equal shapes or a scalar on either side.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor neg(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor log(const Tensor& a);  // DomainError on non-positive entries
Tensor exp(const Tensor& a);
Tensor log_sigmoid(const Tensor& a);  // log σ(x), stable for large |x|
Tensor gelu(const Tensor& a);         // erf form

// x[m×n] + bias[n] broadcast over rows.
Tensor add_row(const Tensor& x, const Tensor& bias);

Tensor softmax_rows(const Tensor& x);
Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);
// DegenerateVectorError when any row norm is below 1e-12.
Tensor l2_normalize_rows(const Tensor& x);

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor reshape(const Tensor& x, Shape shape);

// Row k of the output is (1-f)·x[⌊c⌋] + f·x[⌈c⌉] with c = coords[k], f = c-⌊c⌋.
Tensor lerp_rows(const Tensor& x, std::span<const double> coords);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

}  // namespace mset::num
