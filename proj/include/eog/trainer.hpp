#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "eog/eval.hpp"
#include "eog/model.hpp"

namespace eog {

// Flat training configuration; file keys and CLI flags share these names.
struct TrainConfig {
  // model dimensions
  std::size_t word_dim = 200;
  std::size_t hidden_dim = 100;
  std::size_t node_type_dim = 10;
  std::size_t distance_dim = 10;
  std::size_t edge_dim = 100;
  // graph
  std::string variant = "eog";
  int iterations = -1;  // unset; resolved against the variant
  double beta = 0.8;
  bool edge_mm = true, edge_me = true, edge_ms = true, edge_es = true, edge_ss = true;
  bool edge_ss_indirect = true;
  bool node_types = true, mm_context = true, distances = true;
  // task
  std::vector<std::string> relation_types = {"CID"};
  std::string head_type = "Chemical";
  std::string tail_type = "Disease";
  std::string pair_filter;  // optional exclusion list (hypernym hook)
  bool filter_training = false;
  // optimization
  int batch_size = 2;
  double learning_rate = 0.002;
  double grad_clip = 10.0;
  int patience = 10;
  double l2 = 1e-4;
  double dropout_word = 0.5;
  double dropout_cls = 0.3;
  int max_epochs = 300;
  std::uint64_t seed = 42;
};

// key=value assignment; unknown keys are rejected.
void apply_config_key(TrainConfig& config, const std::string& key,
                      const std::string& value);
TrainConfig read_config_file(const std::string& path);
// Range/consistency checks; resolves an unset iteration count (0 for noinf,
// 3 otherwise). Throws ConfigError.
void validate_config(TrainConfig& config);
// Canonical key=value rendering (sorted keys) and its FNV-1a hash.
std::string config_to_string(const TrainConfig& config);
std::string config_hash(const TrainConfig& config);
ModelConfig model_config(const TrainConfig& config);

struct Checkpoint {
  int version = 1;
  TrainConfig config;
  Vocabulary vocab;
  double best_dev_f1 = 0.0;
  int epoch = 0;
  std::vector<std::pair<std::string, Tensor>> tensors;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);
Checkpoint checkpoint_from_model(Model& model, const TrainConfig& config,
                                 double best_dev_f1, int epoch);
Model model_from_checkpoint(const Checkpoint& ckpt);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  bool has_dev = false;
  Metrics dev;
};

// Deterministic serialization of one training-log line; wall-clock timing is
// deliberately absent so identical runs produce identical logs.
std::string epoch_record_json(const EpochRecord& rec);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochRecord> log;
};

// Batched training with shuffling, clipping, Adam and dev-F1 early stopping.
// With an empty dev set the loop runs max_epochs and returns the final
// parameters. `console`, when given, receives one progress line per epoch
// (including timing, which never reaches the log records).
TrainResult train(const TrainConfig& config, const std::vector<Document>& train_docs,
                  const std::vector<Document>& dev_docs, const Vocabulary& vocab,
                  const Tensor* pretrained_words = nullptr,
                  std::ostream* console = nullptr);

}  // namespace eog
