#pragma once

#include <span>
#include <string>
#include <vector>

#include "eog/autodiff.hpp"
#include "eog/corpus.hpp"

namespace eog {

enum class NodeKind { Mention = 0, Entity = 1, Sentence = 2 };
enum class EdgeFamily { MM, MS, ME, SS, ES, EE };

const char* to_string(NodeKind k);
const char* to_string(EdgeFamily f);

struct Node {
  NodeKind kind;
  int provenance;    // mention/entity/sentence index in the document
  Tensor word_part;  // averaged contextual vectors, [2H]
  Tensor repr;       // word_part (+ node type embedding when enabled)
};

// Mention nodes first, then entity nodes, then sentence nodes.
struct NodeSet {
  std::vector<Node> nodes;
  int mention_count = 0;
  int entity_count = 0;
  int sentence_count = 0;

  int size() const { return static_cast<int>(nodes.size()); }
  int mention_node(int m) const { return m; }
  int entity_node(int e) const { return mention_count + e; }
  int sentence_node(int s) const { return mention_count + entity_count + s; }
};

struct GraphParams {
  Tensor node_type_emb;  // [3, type_dim]
  Tensor dist_mm_emb;    // [buckets, dist_dim]
  Tensor dist_ss_emb;    // [buckets, dist_dim]
};

// Edge-family and enhancement toggles; `full` connects every node pair
// (including EE) regardless of the family rules.
struct EdgeFlags {
  bool mm = true, ms = true, me = true, ss = true, es = true;
  bool ss_indirect = true;
  bool node_types = true, mm_context = true, distances = true;
  bool full = false;
};

// Distances bucketed as {0, 1, 2, 3-4, 5-7, 8-15, 16-31, 32+}.
constexpr int kDistanceBuckets = 8;
int distance_bucket(long distance);

NodeSet construct_nodes(const Document& doc, std::span<const Tensor> encoded,
                        const GraphParams& params, const EdgeFlags& flags);

struct MmAttention {
  Tensor context;  // [2H]; zero vector when no word is eligible
  Tensor a1, a2;   // per-argument weights over the sentence, [len]
  bool support1 = false, support2 = false;
};

// Argument-based attention for a same-sentence mention pair: per-argument
// softmax over words outside that mention, averaged, then applied to the
// sentence matrix.
MmAttention mm_context_full(const Tensor& m1_word, const Tensor& m2_word,
                            const Tensor& sentence_matrix,
                            std::pair<int, int> span1, std::pair<int, int> span2);
Tensor mm_context(const Tensor& m1_word, const Tensor& m2_word,
                  const Tensor& sentence_matrix, std::pair<int, int> span1,
                  std::pair<int, int> span2);

struct RawEdge {
  int a = 0, b = 0;  // node indices, a < b
  EdgeFamily family = EdgeFamily::MM;
  Tensor feature;
};

std::vector<RawEdge> construct_edges(const Document& doc, const NodeSet& nodes,
                                     std::span<const Tensor> encoded,
                                     const GraphParams& params, const EdgeFlags& flags);

// Typed-edge matrix over the node set: symmetric, with an existence mask and
// zero semantics for missing cells.
class EdgeMatrix {
 public:
  EdgeMatrix() = default;
  EdgeMatrix(int nodes, std::size_t dim);

  int node_count() const { return n_; }
  std::size_t dim() const { return dim_; }
  bool exists(int i, int j) const;
  const Tensor& cell(int i, int j) const;
  Tensor cell_or_zero(int i, int j) const;
  void set_cell(int i, int j, Tensor value);
  const std::vector<std::uint8_t>& mask() const { return mask_; }  // n*n row-major

 private:
  std::size_t tri(int i, int j) const;
  int n_ = 0;
  std::size_t dim_ = 0;
  std::vector<Tensor> cells_;
  std::vector<std::uint8_t> mask_;
};

struct ReduceParams {
  Tensor w_mm, w_ms, w_me, w_ss, w_es;
  Tensor w_ee;  // allocated only for the fully-connected / no-inference models
  const Tensor& for_family(EdgeFamily f) const;
};

// Family-specific linear reduction to the shared edge dimension (e^(1) = W_z x_z).
EdgeMatrix reduce_edges(std::span<const RawEdge> edges, const ReduceParams& params,
                        int node_count);

// Line-delimited dump records for the analyze CLI.
struct EdgeRecord {
  std::string family;
  std::string kind_a, kind_b;
  int index_a = 0, index_b = 0;
};
std::vector<EdgeRecord> edge_records(const NodeSet& nodes, std::span<const RawEdge> edges);

}  // namespace eog
