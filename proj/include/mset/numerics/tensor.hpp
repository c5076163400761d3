#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mset::num {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Storage shared between a Tensor handle and the tape records that reference it.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a gradient is accumulated
  bool requires_grad = false;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

// Dense row-major float64 tensor. Copies share storage; use clone() for a
// deep copy. Shapes are non-empty lists of positive extents; a scalar is {1}.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows,
                       bool requires_grad = false);
  static Tensor row(std::span<const double> values, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->value.size(); }
  std::size_t rows() const;  // first extent (1 for rank-1 tensors)
  std::size_t cols() const;  // last extent
  bool is_scalar() const { return size() == 1; }

  std::span<const double> data() const { return node_->value; }
  // In-place access for initializers and optimizers. Never use on tensors
  // whose values are referenced by a live tape.
  std::span<double> mutable_data() { return node_->value; }
  std::span<const double> row_span(std::size_t r) const;

  double item() const;
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool has_grad() const { return node_->grad.size() == node_->value.size() && !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  void zero_grad() { node_->grad.clear(); }

  Tensor clone() const;   // deep copy, keeps requires_grad, drops grad
  Tensor detach() const;  // deep copy without requires_grad

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  friend Tensor wrap_node(std::shared_ptr<Node> node);

  std::shared_ptr<Node> node_;
};

Tensor wrap_node(std::shared_ptr<Node> node);

bool bit_equal(const Tensor& a, const Tensor& b);

}  // namespace mset::num
