#pragma once

#include <span>
#include <string>
#include <vector>

#include "eog/eval.hpp"
#include "eog/trainer.hpp"

namespace eog {

struct SweepPoint {
  std::string label;
  TrainConfig config;
};

struct SweepResult {
  std::string label;
  bool ok = false;
  std::string error;
  Metrics metrics;
};

// Trains and scores every grid point. Each point runs with an independent
// seed derived from (base seed, point index); failures are recorded per
// point and do not stop the sweep.
std::vector<SweepResult> ablation_sweep(std::span<const SweepPoint> grid,
                                        const std::vector<Document>& train_docs,
                                        const std::vector<Document>& dev_docs,
                                        const std::vector<Document>& eval_docs,
                                        const Vocabulary& vocab,
                                        const Tensor* pretrained_words = nullptr);

// Preset grids mirroring the edge-ablation, enhancement-ablation and
// iteration-count analyses.
std::vector<SweepPoint> edge_ablation_grid(const TrainConfig& base);
std::vector<SweepPoint> enhancement_grid(const TrainConfig& base);
std::vector<SweepPoint> iteration_grid(const TrainConfig& base, int max_iterations = 5);

}  // namespace eog
