#include "eog/eval.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "eog/errors.hpp"

namespace eog {

void SplitCounts::finalize() {
  precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
  f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

namespace {

void tally(SplitCounts& c, const PairPrediction& p, int no_rel) {
  const bool pred_pos = p.predicted != no_rel;
  const bool gold_pos = p.gold != no_rel;
  if (pred_pos && gold_pos && p.predicted == p.gold) {
    ++c.tp;
  } else {
    if (pred_pos) ++c.fp;
    if (gold_pos) ++c.fn;
  }
}

}  // namespace

Metrics score(std::span<const PairPrediction> predictions, int no_relation_class) {
  std::set<PairKey> seen;
  Metrics m;
  for (const PairPrediction& p : predictions) {
    if (!seen.insert({p.doc_id, p.head_id, p.tail_id}).second) {
      throw DataError("score: duplicate prediction for (" + p.doc_id + ", " +
                      p.head_id + ", " + p.tail_id + ")");
    }
    tally(m.overall, p, no_relation_class);
    tally(p.intra ? m.intra : m.inter, p, no_relation_class);
  }
  m.overall.finalize();
  m.intra.finalize();
  m.inter.finalize();
  return m;
}

std::pair<bool, int> pair_locality(const Document& doc, int head_entity,
                                   int tail_entity) {
  int best = std::numeric_limits<int>::max();
  for (int hm : doc.entities[head_entity].mention_refs) {
    for (int tm : doc.entities[tail_entity].mention_refs) {
      best = std::min(best, std::abs(doc.mentions[hm].sentence_index -
                                     doc.mentions[tm].sentence_index));
    }
  }
  return {best == 0, best};
}

std::vector<DistanceF1> distance_breakdown(std::span<const PairPrediction> predictions,
                                           int no_relation_class) {
  std::map<int, SplitCounts> buckets;
  for (const PairPrediction& p : predictions) {
    if (p.intra) continue;
    tally(buckets[p.min_sentence_distance], p, no_relation_class);
  }
  std::vector<DistanceF1> out;
  for (auto& [distance, counts] : buckets) {
    counts.finalize();
    out.push_back(DistanceF1{distance, counts});
  }
  return out;
}

std::set<PairKey> load_pair_filter(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read pair filter from " + path);
  std::set<PairKey> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string doc, head, tail;
    if (!(ls >> doc >> head >> tail)) {
      throw DataError("pair filter line " + std::to_string(line_no) +
                      ": expected doc_id head_id tail_id");
    }
    out.insert({doc, head, tail});
  }
  return out;
}

std::vector<PairPrediction> apply_pair_filter(std::span<const PairPrediction> predictions,
                                              const std::set<PairKey>& excluded) {
  std::vector<PairPrediction> out;
  out.reserve(predictions.size());
  for (const PairPrediction& p : predictions) {
    if (excluded.count({p.doc_id, p.head_id, p.tail_id})) continue;
    out.push_back(p);
  }
  return out;
}

}  // namespace eog
