#include "eog/sweep.hpp"

#include "eog/rng.hpp"

namespace eog {

std::vector<SweepResult> ablation_sweep(std::span<const SweepPoint> grid,
                                        const std::vector<Document>& train_docs,
                                        const std::vector<Document>& dev_docs,
                                        const std::vector<Document>& eval_docs,
                                        const Vocabulary& vocab,
                                        const Tensor* pretrained_words) {
  std::vector<SweepResult> results;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    SweepResult res;
    res.label = grid[i].label;
    try {
      TrainConfig config = grid[i].config;
      config.seed = SplitRng(config.seed).split(i).seed();
      TrainResult trained = train(config, train_docs, dev_docs, vocab, pretrained_words);
      Model model = model_from_checkpoint(trained.checkpoint);
      std::vector<PairPrediction> preds = predict(model, eval_docs);
      if (!config.pair_filter.empty()) {
        preds = apply_pair_filter(preds, load_pair_filter(config.pair_filter));
      }
      res.metrics = score(preds, model.cfg.no_relation_class());
      res.ok = true;
    } catch (const std::exception& e) {
      res.error = e.what();
    }
    results.push_back(std::move(res));
  }
  return results;
}

std::vector<SweepPoint> edge_ablation_grid(const TrainConfig& base) {
  std::vector<SweepPoint> grid;
  auto with = [&](const std::string& label, auto mutate) {
    TrainConfig c = base;
    mutate(c);
    grid.push_back({label, c});
  };
  with("EoG", [](TrainConfig&) {});
  with("-MM", [](TrainConfig& c) { c.edge_mm = false; });
  with("-ME", [](TrainConfig& c) { c.edge_me = false; });
  with("-MS", [](TrainConfig& c) { c.edge_ms = false; });
  with("-ES", [](TrainConfig& c) { c.edge_es = false; });
  with("-SSind", [](TrainConfig& c) { c.edge_ss_indirect = false; });
  with("-SS", [](TrainConfig& c) { c.edge_ss = false; });
  with("-MM,ME,MS", [](TrainConfig& c) {
    c.edge_mm = c.edge_me = c.edge_ms = false;
  });
  with("-ES,MS,SS", [](TrainConfig& c) {
    c.edge_es = c.edge_ms = c.edge_ss = false;
  });
  return grid;
}

std::vector<SweepPoint> enhancement_grid(const TrainConfig& base) {
  std::vector<SweepPoint> grid;
  auto with = [&](const std::string& label, auto mutate) {
    TrainConfig c = base;
    mutate(c);
    grid.push_back({label, c});
  };
  with("EoG", [](TrainConfig&) {});
  with("-T", [](TrainConfig& c) { c.node_types = false; });
  with("-C", [](TrainConfig& c) { c.mm_context = false; });
  with("-D", [](TrainConfig& c) { c.distances = false; });
  with("-T,C,D", [](TrainConfig& c) {
    c.node_types = c.mm_context = c.distances = false;
  });
  return grid;
}

std::vector<SweepPoint> iteration_grid(const TrainConfig& base, int max_iterations) {
  std::vector<SweepPoint> grid;
  for (int n = 0; n <= max_iterations; ++n) {
    TrainConfig c = base;
    c.iterations = n;
    grid.push_back({"N=" + std::to_string(n), c});
  }
  return grid;
}

}  // namespace eog
