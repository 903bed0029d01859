#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace eog {

struct GradCheckResult {
  std::string name;
  double max_rel_err = 0.0;
};

// Finite-difference verification of every parameterized layer at toy
// dimensions: embeddings, BiLSTM, attention path, edge reductions, the
// bilinear matrix through two inference steps, the classifier, and the full
// model loss end to end. Dropout is disabled throughout.
std::vector<GradCheckResult> run_gradcheck(std::uint64_t seed = 7);

}  // namespace eog
