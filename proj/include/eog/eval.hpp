#pragma once

#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "eog/corpus.hpp"

namespace eog {

struct PairPrediction {
  std::string doc_id;
  std::string head_id, tail_id;  // entity KB ids
  int predicted = 0;
  int gold = 0;
  bool intra = false;
  int min_sentence_distance = 0;
};

struct SplitCounts {
  long tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  void finalize();
};

struct Metrics {
  SplitCounts overall, intra, inter;
};

// Micro P/R/F1 over the positive classes; the no-relation class is never a
// prediction target. Throws on duplicate (doc, head, tail) triples.
Metrics score(std::span<const PairPrediction> predictions, int no_relation_class);

// intra iff some sentence contains a mention of both entities; the distance
// is the minimum sentence gap over all mention pairs.
std::pair<bool, int> pair_locality(const Document& doc, int head_entity,
                                   int tail_entity);

struct DistanceF1 {
  int distance = 0;
  SplitCounts counts;
};

// Micro F1 of inter-sentence predictions per exact sentence distance.
std::vector<DistanceF1> distance_breakdown(std::span<const PairPrediction> predictions,
                                           int no_relation_class);

// Hypernym-filter hook: tab-separated lines "doc_id head_id tail_id".
using PairKey = std::tuple<std::string, std::string, std::string>;
std::set<PairKey> load_pair_filter(const std::string& path);
std::vector<PairPrediction> apply_pair_filter(std::span<const PairPrediction> predictions,
                                              const std::set<PairKey>& excluded);

}  // namespace eog
