#include "mset/numerics/tensor.hpp"

#include <cstring>
#include <sstream>

#include "mset/error.hpp"

namespace mset::num {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one extent");
  for (auto e : shape)
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_string(shape));
  if (shape_size(shape) != data.size())
    throw DimensionError("tensor data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_string(shape));
  node_ = std::make_shared<Node>();
  node_->shape = std::move(shape);
  node_->value = std::move(data);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  auto n = shape_size(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return Tensor({1}, {value}, requires_grad); }

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows, bool requires_grad) {
  const std::size_t m = rows.size();
  const std::size_t n = m ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(m * n);
  for (const auto& r : rows) {
    if (r.size() != n) throw DimensionError("ragged matrix literal");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor({m, n}, std::move(data), requires_grad);
}

Tensor Tensor::row(std::span<const double> values, bool requires_grad) {
  return Tensor({1, values.size()}, std::vector<double>(values.begin(), values.end()), requires_grad);
}

std::size_t Tensor::rows() const { return rank() == 1 ? 1 : shape().front(); }
std::size_t Tensor::cols() const { return shape().back(); }

std::span<const double> Tensor::row_span(std::size_t r) const {
  const auto c = cols();
  return data().subspan(r * c, c);
}

double Tensor::item() const {
  if (size() != 1) throw RankError("item() on non-scalar tensor " + shape_string(shape()));
  return node_->value[0];
}

double Tensor::at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }

Tensor Tensor::clone() const {
  Tensor t(shape(), node_->value, node_->requires_grad);
  return t;
}

Tensor Tensor::detach() const { return Tensor(shape(), node_->value, false); }

Tensor wrap_node(std::shared_ptr<Node> node) { return Tensor(std::move(node)); }

bool bit_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  return std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(double)) == 0;
}

}  // namespace mset::num
