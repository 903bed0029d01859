#pragma once

#include <span>

#include "eog/autodiff.hpp"

namespace eog {

class SplitRng;

struct ClassifierParams {
  Tensor w;  // [r, d_z]
  Tensor b;  // [r]
  int categories() const { return static_cast<int>(b.shape()[0]); }
  int no_relation_class() const { return categories() - 1; }
};

// softmax(W_c e + b_c); dropout applies to the edge vector in train mode.
Tensor classify_pair(const Tensor& edge, const ClassifierParams& params,
                     double dropout_rate, bool train_mode, SplitRng& rng);

// Mean negative log-probability of the gold classes plus lambda * ||W||^2
// over the given weight matrices.
Tensor pair_loss(std::span<const Tensor> probabilities, std::span<const int> gold,
                 std::span<const Tensor> l2_weights, double lambda);

// argmax with ties broken toward the lower class index.
int decide(const Tensor& probabilities);

}  // namespace eog
