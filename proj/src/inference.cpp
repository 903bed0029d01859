#include "eog/inference.hpp"

#include <stdexcept>

namespace eog {

Tensor combine_pair(const Tensor& e_ik, const Tensor& e_kj, const Tensor& w) {
  return sigmoid(mul(e_ik, matvec(w, e_kj)));
}

EdgeMatrix inference_step(const EdgeMatrix& edges, const InferenceParams& params) {
  const int n = edges.node_count();
  EdgeMatrix next(n, edges.dim());

  // W e_kj depends only on the unordered cell, so transform each existing
  // cell once per step.
  std::vector<Tensor> transformed(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (!edges.exists(i, j)) continue;
      Tensor t = matvec(params.w, edges.cell(i, j));
      transformed[static_cast<std::size_t>(i) * n + j] = t;
      transformed[static_cast<std::size_t>(j) * n + i] = t;
    }
  }

  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      std::vector<Tensor> lefts, rights;
      for (int k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        if (!edges.exists(i, k) || !edges.exists(k, j)) continue;
        lefts.push_back(edges.cell(i, k));
        rights.push_back(transformed[static_cast<std::size_t>(k) * n + j]);
      }
      const bool had_edge = edges.exists(i, j);
      if (lefts.empty() && !had_edge) continue;

      Tensor value;
      if (lefts.empty()) {
        value = scale(edges.cell(i, j), params.beta);
      } else {
        Tensor aggregate = sum_rows(sigmoid(mul(stack_rows(lefts), stack_rows(rights))));
        value = had_edge ? lerp(edges.cell(i, j), aggregate, params.beta)
                         : scale(aggregate, 1.0 - params.beta);
      }
      next.set_cell(i, j, std::move(value));
    }
  }
  return next;
}

EdgeMatrix run_inference(const EdgeMatrix& edges, const InferenceParams& params) {
  if (params.iterations < 0) {
    throw std::invalid_argument("run_inference: negative iteration count");
  }
  EdgeMatrix current = edges;
  for (int step = 0; step < params.iterations; ++step) {
    current = inference_step(current, params);
  }
  return current;
}

std::vector<std::uint8_t> step_mask(const std::vector<std::uint8_t>& mask, int n) {
  std::vector<std::uint8_t> next = mask;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (next[static_cast<std::size_t>(i) * n + j]) continue;
      for (int k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        if (mask[static_cast<std::size_t>(i) * n + k] &&
            mask[static_cast<std::size_t>(k) * n + j]) {
          next[static_cast<std::size_t>(i) * n + j] = 1;
          next[static_cast<std::size_t>(j) * n + i] = 1;
          break;
        }
      }
    }
  }
  return next;
}

std::vector<std::uint8_t> run_inference_mask(std::vector<std::uint8_t> mask, int n,
                                             int iterations) {
  for (int step = 0; step < iterations; ++step) mask = step_mask(mask, n);
  return mask;
}

}  // namespace eog
