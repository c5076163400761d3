#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "mset/numerics/tensor.hpp"

namespace mset::num {

// Reverse-mode tape. Operations record onto the tape installed for the
// calling thread by a TapeScope; with no scope active, ops run forward only
// and results never require grad.
class Tape {
 public:
  using Rule = std::function<void()>;

  struct Record {
    std::vector<std::shared_ptr<Node>> inputs;
    std::shared_ptr<Node> output;
    Rule backward;
  };

  void record(std::vector<std::shared_ptr<Node>> inputs, std::shared_ptr<Node> output, Rule rule);

  // Seeds d(loss)/d(loss) = 1 and runs every recorded rule in reverse order.
  // Gradients accumulate into leaves; the tape is cleared afterwards.
  void backward(const Tensor& loss);

  void clear() { records_.clear(); }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const std::vector<Record>& records() const { return records_; }

  static Tape* active();

 private:
  friend class TapeScope;
  std::vector<Record> records_;
};

class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

// Forward-only region even if an outer TapeScope is active.
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

}  // namespace mset::num
