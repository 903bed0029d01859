#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "eog/autodiff.hpp"

namespace eog {

// A learned tensor with its registry name. `l2` marks weight matrices that
// participate in the L2 loss term (embeddings and biases do not).
struct NamedParam {
  std::string name;
  Tensor tensor;
  bool l2 = false;
};

// Adam with bias correction. Moment accumulators are allocated on first use
// and track the parameter list order.
class AdamState {
 public:
  AdamState(double learning_rate = 0.002, double beta1 = 0.9, double beta2 = 0.999,
            double epsilon = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

  // Applies one update using the grads stored in the parameters. Throws if a
  // parameter has no grad buffer.
  void step(std::span<NamedParam> params);

  long step_count() const { return step_; }
  double learning_rate() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long step_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// Global-norm gradient clipping over the grads of `params`. Returns the
// pre-clip norm. No-op when the norm is within max_norm.
double clip_global_norm(std::span<NamedParam> params, double max_norm);

// Max over all parameter entries of the relative error between the tape
// gradient of f() and a central finite difference. f must be deterministic
// and must evaluate the loss from scratch on each call.
double finite_difference_check(const std::function<Tensor()>& f,
                               std::span<NamedParam> params, double eps);

}  // namespace eog
