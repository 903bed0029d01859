#pragma once

#include <span>
#include <vector>

#include "eog/classifier.hpp"
#include "eog/corpus.hpp"
#include "eog/encoder.hpp"
#include "eog/eval.hpp"
#include "eog/graph.hpp"
#include "eog/inference.hpp"
#include "eog/optim.hpp"

namespace eog {

enum class Variant { EoG, Full, NoInf, Sent };

const char* to_string(Variant v);
Variant variant_from(const std::string& s);

struct ModelConfig {
  std::size_t word_dim = 200;
  std::size_t hidden_dim = 100;  // per direction
  std::size_t type_dim = 10;
  std::size_t dist_dim = 10;
  std::size_t edge_dim = 100;
  int relation_classes = 2;  // includes no-relation (highest index)
  double beta = 0.8;
  int iterations = 3;
  double dropout_word = 0.5;
  double dropout_cls = 0.3;
  SemanticType head_type = SemanticType::Chemical;
  SemanticType tail_type = SemanticType::Disease;
  Variant variant = Variant::EoG;
  EdgeFlags flags;

  std::size_t node_dim() const {
    return 2 * hidden_dim + (flags.node_types ? type_dim : 0);
  }
  int no_relation_class() const { return relation_classes - 1; }
};

struct Model {
  ModelConfig cfg;
  Vocabulary vocab;
  EncoderParams encoder;
  GraphParams graph;
  ReduceParams reduce;
  InferenceParams infer;
  ClassifierParams cls;

  // Stable registry used by the optimizer, gradient checks and checkpoints.
  std::vector<NamedParam> parameters();
  std::vector<Tensor> l2_weights();
};

// Fresh parameters: matrices uniform in +-1/sqrt(fan_in), embedding tables
// uniform in +-0.05, biases zero (forget gate 1). A preloaded word table
// takes the place of the word embedding draw.
Model init_model(const ModelConfig& cfg, const Vocabulary& vocab, SplitRng& rng,
                 const Tensor* pretrained_words = nullptr);

struct GraphBuild {
  std::vector<Tensor> encoded;  // per sentence, [len, 2H]
  NodeSet nodes;
  std::vector<RawEdge> raw;
  EdgeMatrix edges;  // reduced, pre-inference
};

GraphBuild build_document_graph(const Model& model, const Document& doc,
                                bool train_mode, SplitRng& rng);

struct PairOutput {
  int head_entity = 0, tail_entity = 0;
  int gold = 0;
  Tensor probs;
};

// Full pipeline for the document-level variants (EoG, Full, NoInf).
std::vector<PairOutput> forward_document(const Model& model, const Document& doc,
                                         bool train_mode, SplitRng& rng);

struct MentionPairOutput {
  int head_mention = 0, tail_mention = 0;
  int head_entity = 0, tail_entity = 0;
  int gold = 0;
  Tensor probs;
};

// Mention-level pipeline for the sentence variant; doc must be a
// single-sentence document.
std::vector<MentionPairOutput> forward_sentence_pairs(const Model& model,
                                                      const Document& doc,
                                                      bool train_mode, SplitRng& rng);

// Evaluation-mode predictions for a batch of documents. The sentence variant
// merges mention-level decisions per entity pair (positive if any mention
// pair is positive); pairs it never examines come out negative.
std::vector<PairPrediction> predict(const Model& model, std::span<const Document> docs);

}  // namespace eog
