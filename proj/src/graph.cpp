#include "eog/graph.hpp"

#include <algorithm>
#include <stdexcept>

namespace eog {

const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Mention: return "M";
    case NodeKind::Entity: return "E";
    case NodeKind::Sentence: return "S";
  }
  return "?";
}

const char* to_string(EdgeFamily f) {
  switch (f) {
    case EdgeFamily::MM: return "MM";
    case EdgeFamily::MS: return "MS";
    case EdgeFamily::ME: return "ME";
    case EdgeFamily::SS: return "SS";
    case EdgeFamily::ES: return "ES";
    case EdgeFamily::EE: return "EE";
  }
  return "?";
}

int distance_bucket(long distance) {
  if (distance <= 0) return 0;
  if (distance == 1) return 1;
  if (distance == 2) return 2;
  if (distance <= 4) return 3;
  if (distance <= 7) return 4;
  if (distance <= 15) return 5;
  if (distance <= 31) return 6;
  return 7;
}

NodeSet construct_nodes(const Document& doc, std::span<const Tensor> encoded,
                        const GraphParams& params, const EdgeFlags& flags) {
  if (encoded.size() != doc.sentences.size()) {
    throw std::invalid_argument("construct_nodes: encoded sentences (" +
                                std::to_string(encoded.size()) + ") do not cover " +
                                std::to_string(doc.sentences.size()) + " sentences");
  }
  NodeSet set;
  set.mention_count = static_cast<int>(doc.mentions.size());
  set.entity_count = static_cast<int>(doc.entities.size());
  set.sentence_count = static_cast<int>(doc.sentences.size());

  auto typed = [&](Tensor word_part, NodeKind kind) {
    if (!flags.node_types) return word_part;
    std::vector<Tensor> parts = {word_part,
                                 row(params.node_type_emb, static_cast<int>(kind))};
    return concat(parts);
  };

  std::vector<Tensor> mention_words(doc.mentions.size());
  for (std::size_t m = 0; m < doc.mentions.size(); ++m) {
    const Mention& men = doc.mentions[m];
    std::vector<int> idx;
    for (int t = men.token_start; t < men.token_end; ++t) idx.push_back(t);
    mention_words[m] = mean_rows(encoded[men.sentence_index], idx);
    set.nodes.push_back(Node{NodeKind::Mention, static_cast<int>(m), mention_words[m],
                             typed(mention_words[m], NodeKind::Mention)});
  }
  for (std::size_t e = 0; e < doc.entities.size(); ++e) {
    const Entity& ent = doc.entities[e];
    if (ent.mention_refs.empty()) {
      throw std::invalid_argument("construct_nodes: entity " + ent.kb_id +
                                  " has no mentions (was the corpus filtered?)");
    }
    std::vector<Tensor> parts;
    for (int m : ent.mention_refs) parts.push_back(mention_words[m]);
    std::vector<int> all(parts.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    Tensor word = mean_rows(stack_rows(parts), all);
    set.nodes.push_back(
        Node{NodeKind::Entity, static_cast<int>(e), word, typed(word, NodeKind::Entity)});
  }
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    std::vector<int> all(doc.sentences[s].tokens.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    Tensor word = mean_rows(encoded[s], all);
    set.nodes.push_back(Node{NodeKind::Sentence, static_cast<int>(s), word,
                             typed(word, NodeKind::Sentence)});
  }
  return set;
}

MmAttention mm_context_full(const Tensor& m1_word, const Tensor& m2_word,
                            const Tensor& sentence_matrix, std::pair<int, int> span1,
                            std::pair<int, int> span2) {
  const std::size_t len = sentence_matrix.shape()[0];
  const std::size_t dim = sentence_matrix.shape()[1];
  auto support_mask = [&](std::pair<int, int> span) {
    std::vector<std::uint8_t> mask(len, 1);
    for (int t = span.first; t < span.second && t < static_cast<int>(len); ++t) {
      mask[t] = 0;
    }
    return mask;
  };
  std::vector<std::uint8_t> mask1 = support_mask(span1);
  std::vector<std::uint8_t> mask2 = support_mask(span2);
  auto any = [](const std::vector<std::uint8_t>& m) {
    return std::any_of(m.begin(), m.end(), [](std::uint8_t v) { return v != 0; });
  };

  MmAttention out;
  out.support1 = any(mask1);
  out.support2 = any(mask2);
  if (!out.support1 && !out.support2) {
    // degenerate sentence made of the two mentions only
    out.a1 = Tensor::zeros({len});
    out.a2 = Tensor::zeros({len});
    out.context = Tensor::zeros({dim});
    return out;
  }
  out.a1 = out.support1 ? softmax(matvec(sentence_matrix, m1_word), mask1)
                        : Tensor::zeros({len});
  out.a2 = out.support2 ? softmax(matvec(sentence_matrix, m2_word), mask2)
                        : Tensor::zeros({len});
  Tensor combined = scale(add(out.a1, out.a2), 0.5);
  out.context = tmatvec(sentence_matrix, combined);
  return out;
}

Tensor mm_context(const Tensor& m1_word, const Tensor& m2_word,
                  const Tensor& sentence_matrix, std::pair<int, int> span1,
                  std::pair<int, int> span2) {
  return mm_context_full(m1_word, m2_word, sentence_matrix, span1, span2).context;
}

namespace {

// token offset of every sentence start within the whole document
std::vector<long> sentence_offsets(const Document& doc) {
  std::vector<long> off(doc.sentences.size() + 1, 0);
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    off[s + 1] = off[s] + static_cast<long>(doc.sentences[s].tokens.size());
  }
  return off;
}

// intermediate-word count between two mention spans (document coordinates)
long mention_word_distance(const Document& doc, const std::vector<long>& off, int m1,
                           int m2) {
  const Mention& a = doc.mentions[m1];
  const Mention& b = doc.mentions[m2];
  long a_start = off[a.sentence_index] + a.token_start;
  long a_end = off[a.sentence_index] + a.token_end;
  long b_start = off[b.sentence_index] + b.token_start;
  long b_end = off[b.sentence_index] + b.token_end;
  if (a_start > b_start) {
    std::swap(a_start, b_start);
    std::swap(a_end, b_end);
  }
  return std::max(0L, b_start - a_end);
}

}  // namespace

std::vector<RawEdge> construct_edges(const Document& doc, const NodeSet& nodes,
                                     std::span<const Tensor> encoded,
                                     const GraphParams& params, const EdgeFlags& flags) {
  std::vector<RawEdge> edges;
  const std::vector<long> off = sentence_offsets(doc);

  auto push = [&](int a, int b, EdgeFamily family, Tensor feature) {
    if (a > b) std::swap(a, b);
    edges.push_back(RawEdge{a, b, family, std::move(feature)});
  };

  // MM: same-sentence mention pairs (all pairs when fully connected)
  if (flags.mm || flags.full) {
    for (int i = 0; i < nodes.mention_count; ++i) {
      for (int j = i + 1; j < nodes.mention_count; ++j) {
        const Mention& mi = doc.mentions[i];
        const Mention& mj = doc.mentions[j];
        const bool same_sentence = mi.sentence_index == mj.sentence_index;
        if (!same_sentence && !flags.full) continue;
        const Node& ni = nodes.nodes[nodes.mention_node(i)];
        const Node& nj = nodes.nodes[nodes.mention_node(j)];
        std::vector<Tensor> parts = {ni.repr, nj.repr};
        if (flags.mm_context) {
          if (same_sentence) {
            parts.push_back(mm_context(ni.word_part, nj.word_part,
                                       encoded[mi.sentence_index],
                                       {mi.token_start, mi.token_end},
                                       {mj.token_start, mj.token_end}));
          } else {
            parts.push_back(Tensor::zeros({encoded[mi.sentence_index].shape()[1]}));
          }
        }
        if (flags.distances) {
          int bucket = distance_bucket(mention_word_distance(doc, off, i, j));
          parts.push_back(row(params.dist_mm_emb, bucket));
        }
        push(nodes.mention_node(i), nodes.mention_node(j), EdgeFamily::MM,
             concat(parts));
      }
    }
  }

  // MS: mention resides in sentence
  if (flags.ms || flags.full) {
    for (int m = 0; m < nodes.mention_count; ++m) {
      for (int s = 0; s < nodes.sentence_count; ++s) {
        if (doc.mentions[m].sentence_index != s && !flags.full) continue;
        std::vector<Tensor> parts = {nodes.nodes[nodes.mention_node(m)].repr,
                                     nodes.nodes[nodes.sentence_node(s)].repr};
        push(nodes.mention_node(m), nodes.sentence_node(s), EdgeFamily::MS,
             concat(parts));
      }
    }
  }

  // ME: mention is an instance of entity
  if (flags.me || flags.full) {
    for (int m = 0; m < nodes.mention_count; ++m) {
      for (int e = 0; e < nodes.entity_count; ++e) {
        if (doc.mentions[m].entity_ref != e && !flags.full) continue;
        std::vector<Tensor> parts = {nodes.nodes[nodes.mention_node(m)].repr,
                                     nodes.nodes[nodes.entity_node(e)].repr};
        push(nodes.mention_node(m), nodes.entity_node(e), EdgeFamily::ME,
             concat(parts));
      }
    }
  }

  // SS: all sentence pairs; indirect (distance > 1) can be toggled off
  if (flags.ss || flags.full) {
    for (int i = 0; i < nodes.sentence_count; ++i) {
      for (int j = i + 1; j < nodes.sentence_count; ++j) {
        const bool direct = (j - i) == 1;
        if (!direct && !flags.ss_indirect && !flags.full) continue;
        std::vector<Tensor> parts = {nodes.nodes[nodes.sentence_node(i)].repr,
                                     nodes.nodes[nodes.sentence_node(j)].repr};
        if (flags.distances) {
          parts.push_back(row(params.dist_ss_emb, distance_bucket(j - i)));
        }
        push(nodes.sentence_node(i), nodes.sentence_node(j), EdgeFamily::SS,
             concat(parts));
      }
    }
  }

  // ES: at least one mention of the entity resides in the sentence
  if (flags.es || flags.full) {
    for (int e = 0; e < nodes.entity_count; ++e) {
      for (int s = 0; s < nodes.sentence_count; ++s) {
        if (!flags.full) {
          bool present = false;
          for (int m : doc.entities[e].mention_refs) {
            if (doc.mentions[m].sentence_index == s) {
              present = true;
              break;
            }
          }
          if (!present) continue;
        }
        std::vector<Tensor> parts = {nodes.nodes[nodes.entity_node(e)].repr,
                                     nodes.nodes[nodes.sentence_node(s)].repr};
        push(nodes.entity_node(e), nodes.sentence_node(s), EdgeFamily::ES,
             concat(parts));
      }
    }
  }

  // EE: only in the fully-connected setting
  if (flags.full) {
    for (int i = 0; i < nodes.entity_count; ++i) {
      for (int j = i + 1; j < nodes.entity_count; ++j) {
        std::vector<Tensor> parts = {nodes.nodes[nodes.entity_node(i)].repr,
                                     nodes.nodes[nodes.entity_node(j)].repr};
        push(nodes.entity_node(i), nodes.entity_node(j), EdgeFamily::EE,
             concat(parts));
      }
    }
  }
  return edges;
}

// --- EdgeMatrix ---------------------------------------------------------------

EdgeMatrix::EdgeMatrix(int nodes, std::size_t dim)
    : n_(nodes),
      dim_(dim),
      cells_(static_cast<std::size_t>(nodes) * (nodes > 0 ? nodes - 1 : 0) / 2),
      mask_(static_cast<std::size_t>(nodes) * nodes, 0) {}

std::size_t EdgeMatrix::tri(int i, int j) const {
  if (i > j) std::swap(i, j);
  return static_cast<std::size_t>(i) * n_ - static_cast<std::size_t>(i) * (i + 1) / 2 +
         (j - i - 1);
}

bool EdgeMatrix::exists(int i, int j) const {
  if (i == j) return false;
  return mask_[static_cast<std::size_t>(i) * n_ + j] != 0;
}

const Tensor& EdgeMatrix::cell(int i, int j) const {
  if (!exists(i, j)) {
    throw std::invalid_argument("EdgeMatrix::cell: no edge between " +
                                std::to_string(i) + " and " + std::to_string(j));
  }
  return cells_[tri(i, j)];
}

Tensor EdgeMatrix::cell_or_zero(int i, int j) const {
  if (i != j && exists(i, j)) return cells_[tri(i, j)];
  return Tensor::zeros({dim_});
}

void EdgeMatrix::set_cell(int i, int j, Tensor value) {
  if (i == j) throw std::invalid_argument("EdgeMatrix::set_cell: self edge");
  cells_[tri(i, j)] = std::move(value);
  mask_[static_cast<std::size_t>(i) * n_ + j] = 1;
  mask_[static_cast<std::size_t>(j) * n_ + i] = 1;
}

const Tensor& ReduceParams::for_family(EdgeFamily f) const {
  switch (f) {
    case EdgeFamily::MM: return w_mm;
    case EdgeFamily::MS: return w_ms;
    case EdgeFamily::ME: return w_me;
    case EdgeFamily::SS: return w_ss;
    case EdgeFamily::ES: return w_es;
    case EdgeFamily::EE: return w_ee;
  }
  throw std::invalid_argument("unknown edge family tag");
}

EdgeMatrix reduce_edges(std::span<const RawEdge> edges, const ReduceParams& params,
                        int node_count) {
  std::size_t dim = 0;
  for (const Tensor* w : {&params.w_mm, &params.w_ms, &params.w_me, &params.w_ss,
                          &params.w_es, &params.w_ee}) {
    if (w->defined()) {
      dim = w->shape()[0];
      break;
    }
  }
  EdgeMatrix out(node_count, dim);
  for (const RawEdge& edge : edges) {
    const Tensor& w = params.for_family(edge.family);
    if (!w.defined()) {
      throw std::invalid_argument(std::string("reduce_edges: no reduction layer for ") +
                                  to_string(edge.family) + " edges");
    }
    if (out.exists(edge.a, edge.b)) {
      throw std::invalid_argument("reduce_edges: duplicate edge between nodes " +
                                  std::to_string(edge.a) + " and " +
                                  std::to_string(edge.b));
    }
    out.set_cell(edge.a, edge.b, matvec(w, edge.feature));
  }
  return out;
}

std::vector<EdgeRecord> edge_records(const NodeSet& nodes,
                                     std::span<const RawEdge> edges) {
  std::vector<EdgeRecord> out;
  out.reserve(edges.size());
  for (const RawEdge& e : edges) {
    const Node& a = nodes.nodes[e.a];
    const Node& b = nodes.nodes[e.b];
    out.push_back(EdgeRecord{to_string(e.family), to_string(a.kind), to_string(b.kind),
                             a.provenance, b.provenance});
  }
  return out;
}

}  // namespace eog
