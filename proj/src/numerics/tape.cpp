#include "mset/numerics/tape.hpp"

#include "mset/error.hpp"

namespace mset::num {

namespace {
thread_local Tape* g_active = nullptr;
}

Tape* Tape::active() { return g_active; }

void Tape::record(std::vector<std::shared_ptr<Node>> inputs, std::shared_ptr<Node> output, Rule rule) {
  records_.push_back({std::move(inputs), std::move(output), std::move(rule)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw RankError("backward() needs a scalar loss, got " +
                    (loss.defined() ? shape_string(loss.shape()) : std::string("undefined")));
  if (records_.empty()) throw RankError("backward() on an empty tape");
  if (!loss.requires_grad()) throw RankError("backward() on a loss that does not require grad");

  auto& root = *loss.node();
  root.ensure_grad();
  root.grad[0] += 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    if (it->output->grad.empty()) continue;  // output never reached the loss
    it->backward();
  }
  // Release intermediate gradients; leaves (no producing record) keep theirs.
  for (auto& r : records_)
    if (r.output.get() != loss.node().get()) r.output->grad.clear();
  records_.clear();
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active) { g_active = &tape; }
TapeScope::~TapeScope() { g_active = previous_; }

NoGradScope::NoGradScope() : previous_(g_active) { g_active = nullptr; }
NoGradScope::~NoGradScope() { g_active = previous_; }

}  // namespace mset::num
