#pragma once

#include <cstdint>
#include <vector>

#include "eog/autodiff.hpp"
#include "eog/graph.hpp"

namespace eog {

struct InferenceParams {
  Tensor w;           // bilinear matrix, [d_z, d_z]
  double beta = 0.8;  // contribution of the shorter edge
  int iterations = 0;
};

// sigma(e_ik (.) W e_kj): path representation through one intermediate node.
Tensor combine_pair(const Tensor& e_ik, const Tensor& e_kj, const Tensor& w);

// One synchronous update: every unordered pair aggregates paths through all
// intermediates present in the pre-step matrix, then interpolates with its
// previous value (zero vector when the edge did not exist). Existence is
// monotone: new_mask = old_mask OR reachable-through-k.
EdgeMatrix inference_step(const EdgeMatrix& edges, const InferenceParams& params);

// N repetitions of inference_step; N = 0 returns the input unchanged.
EdgeMatrix run_inference(const EdgeMatrix& edges, const InferenceParams& params);

// Mask-level analog of one step, for graph diagnostics.
std::vector<std::uint8_t> step_mask(const std::vector<std::uint8_t>& mask, int n);
std::vector<std::uint8_t> run_inference_mask(std::vector<std::uint8_t> mask, int n,
                                             int iterations);

}  // namespace eog
