#include "eog/model.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "eog/errors.hpp"
#include "eog/rng.hpp"

namespace eog {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::EoG: return "eog";
    case Variant::Full: return "full";
    case Variant::NoInf: return "noinf";
    case Variant::Sent: return "sent";
  }
  return "?";
}

Variant variant_from(const std::string& s) {
  if (s == "eog") return Variant::EoG;
  if (s == "full") return Variant::Full;
  if (s == "noinf") return Variant::NoInf;
  if (s == "sent") return Variant::Sent;
  throw ConfigError("unknown variant '" + s + "' (expected eog|full|noinf|sent)");
}

std::vector<NamedParam> Model::parameters() {
  std::vector<NamedParam> out;
  out.push_back({"word_emb", encoder.word_emb, false});
  out.push_back({"encoder.fwd.w_x", encoder.fwd.w_x, true});
  out.push_back({"encoder.fwd.w_h", encoder.fwd.w_h, true});
  out.push_back({"encoder.fwd.b", encoder.fwd.b, false});
  out.push_back({"encoder.bwd.w_x", encoder.bwd.w_x, true});
  out.push_back({"encoder.bwd.w_h", encoder.bwd.w_h, true});
  out.push_back({"encoder.bwd.b", encoder.bwd.b, false});
  if (cfg.flags.node_types) out.push_back({"graph.node_type_emb", graph.node_type_emb, false});
  if (cfg.flags.distances) {
    out.push_back({"graph.dist_mm_emb", graph.dist_mm_emb, false});
    out.push_back({"graph.dist_ss_emb", graph.dist_ss_emb, false});
  }
  if (cfg.variant != Variant::NoInf) {
    out.push_back({"reduce.w_mm", reduce.w_mm, true});
    out.push_back({"reduce.w_ms", reduce.w_ms, true});
    out.push_back({"reduce.w_me", reduce.w_me, true});
    out.push_back({"reduce.w_ss", reduce.w_ss, true});
    out.push_back({"reduce.w_es", reduce.w_es, true});
  }
  if (reduce.w_ee.defined()) out.push_back({"reduce.w_ee", reduce.w_ee, true});
  if (cfg.variant != Variant::NoInf) out.push_back({"inference.w", infer.w, true});
  out.push_back({"classifier.w", cls.w, true});
  out.push_back({"classifier.b", cls.b, false});
  return out;
}

std::vector<Tensor> Model::l2_weights() {
  std::vector<Tensor> out;
  for (NamedParam& p : parameters()) {
    if (p.l2) out.push_back(p.tensor);
  }
  return out;
}

namespace {

Tensor uniform_matrix(std::size_t rows, std::size_t cols, SplitRng& rng) {
  Tensor t = Tensor::zeros({rows, cols}, true);
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  for (double& v : t.values()) v = rng.uniform(-bound, bound);
  return t;
}

Tensor embedding_table(std::size_t rows, std::size_t cols, SplitRng& rng) {
  Tensor t = Tensor::zeros({rows, cols}, true);
  for (double& v : t.values()) v = rng.uniform(-0.05, 0.05);
  return t;
}

}  // namespace

Model init_model(const ModelConfig& cfg, const Vocabulary& vocab, SplitRng& rng,
                 const Tensor* pretrained_words) {
  Model m;
  m.cfg = cfg;
  m.cfg.flags.full = cfg.variant == Variant::Full;
  m.vocab = vocab;

  if (pretrained_words) {
    if (pretrained_words->shape() !=
        std::vector<std::size_t>{vocab.size(), cfg.word_dim}) {
      throw DataError("init_model: pretrained word table shape does not match "
                      "vocabulary x word_dim");
    }
    m.encoder.word_emb = pretrained_words->clone();
    m.encoder.word_emb.set_requires_grad(true);
  } else {
    m.encoder.word_emb = embedding_table(vocab.size(), cfg.word_dim, rng);
  }
  m.encoder.fwd = init_lstm(cfg.hidden_dim, cfg.word_dim, rng);
  m.encoder.bwd = init_lstm(cfg.hidden_dim, cfg.word_dim, rng);
  m.encoder.input_dropout = cfg.dropout_word;

  m.graph.node_type_emb = embedding_table(3, cfg.type_dim, rng);
  m.graph.dist_mm_emb = embedding_table(kDistanceBuckets, cfg.dist_dim, rng);
  m.graph.dist_ss_emb = embedding_table(kDistanceBuckets, cfg.dist_dim, rng);

  const std::size_t node = m.cfg.node_dim();
  const std::size_t ctx = 2 * cfg.hidden_dim;
  const std::size_t mm_in = 2 * node + (cfg.flags.mm_context ? ctx : 0) +
                            (cfg.flags.distances ? cfg.dist_dim : 0);
  const std::size_t ss_in = 2 * node + (cfg.flags.distances ? cfg.dist_dim : 0);
  m.reduce.w_mm = uniform_matrix(cfg.edge_dim, mm_in, rng);
  m.reduce.w_ms = uniform_matrix(cfg.edge_dim, 2 * node, rng);
  m.reduce.w_me = uniform_matrix(cfg.edge_dim, 2 * node, rng);
  m.reduce.w_ss = uniform_matrix(cfg.edge_dim, ss_in, rng);
  m.reduce.w_es = uniform_matrix(cfg.edge_dim, 2 * node, rng);
  if (cfg.variant == Variant::Full || cfg.variant == Variant::NoInf) {
    m.reduce.w_ee = uniform_matrix(cfg.edge_dim, 2 * node, rng);
  }

  m.infer.w = uniform_matrix(cfg.edge_dim, cfg.edge_dim, rng);
  m.infer.beta = cfg.beta;
  m.infer.iterations = cfg.iterations;

  m.cls.w = uniform_matrix(cfg.relation_classes, cfg.edge_dim, rng);
  m.cls.b = Tensor::zeros({static_cast<std::size_t>(cfg.relation_classes)}, true);
  return m;
}

GraphBuild build_document_graph(const Model& model, const Document& doc,
                                bool train_mode, SplitRng& rng) {
  GraphBuild g;
  g.encoded.reserve(doc.sentences.size());
  for (const Sentence& s : doc.sentences) {
    std::vector<int> ids(s.tokens.size());
    for (std::size_t t = 0; t < s.tokens.size(); ++t) {
      ids[t] = model.vocab.lookup(s.tokens[t]);
    }
    g.encoded.push_back(encode_sentence(model.encoder, ids, train_mode, rng));
  }
  g.nodes = construct_nodes(doc, g.encoded, model.graph, model.cfg.flags);
  g.raw = construct_edges(doc, g.nodes, g.encoded, model.graph, model.cfg.flags);
  g.edges = reduce_edges(g.raw, model.reduce, g.nodes.size());
  return g;
}

std::vector<PairOutput> forward_document(const Model& model, const Document& doc,
                                         bool train_mode, SplitRng& rng) {
  if (model.cfg.variant == Variant::Sent) {
    throw std::logic_error("forward_document: sentence variant uses forward_sentence_pairs");
  }
  std::vector<LabeledPair> pairs = generate_pairs(
      doc, model.cfg.head_type, model.cfg.tail_type, model.cfg.no_relation_class());
  std::vector<PairOutput> out;
  if (pairs.empty()) return out;

  if (model.cfg.variant == Variant::NoInf) {
    // pair representation W_EE [n_e1 ; n_e2], no graph propagation
    GraphBuild g;
    g.encoded.reserve(doc.sentences.size());
    for (const Sentence& s : doc.sentences) {
      std::vector<int> ids(s.tokens.size());
      for (std::size_t t = 0; t < s.tokens.size(); ++t) {
        ids[t] = model.vocab.lookup(s.tokens[t]);
      }
      g.encoded.push_back(encode_sentence(model.encoder, ids, train_mode, rng));
    }
    g.nodes = construct_nodes(doc, g.encoded, model.graph, model.cfg.flags);
    for (const LabeledPair& pair : pairs) {
      std::vector<Tensor> parts = {
          g.nodes.nodes[g.nodes.entity_node(pair.head_entity)].repr,
          g.nodes.nodes[g.nodes.entity_node(pair.tail_entity)].repr};
      Tensor edge = matvec(model.reduce.w_ee, concat(parts));
      out.push_back(PairOutput{pair.head_entity, pair.tail_entity, pair.category,
                               classify_pair(edge, model.cls, model.cfg.dropout_cls,
                                             train_mode, rng)});
    }
    return out;
  }

  GraphBuild g = build_document_graph(model, doc, train_mode, rng);
  EdgeMatrix final_edges = run_inference(g.edges, model.infer);
  for (const LabeledPair& pair : pairs) {
    Tensor edge = final_edges.cell_or_zero(g.nodes.entity_node(pair.head_entity),
                                           g.nodes.entity_node(pair.tail_entity));
    out.push_back(PairOutput{pair.head_entity, pair.tail_entity, pair.category,
                             classify_pair(edge, model.cls, model.cfg.dropout_cls,
                                           train_mode, rng)});
  }
  return out;
}

std::vector<MentionPairOutput> forward_sentence_pairs(const Model& model,
                                                      const Document& doc,
                                                      bool train_mode, SplitRng& rng) {
  if (doc.sentences.size() != 1) {
    throw std::logic_error("forward_sentence_pairs: expected a single-sentence document");
  }
  std::vector<MentionPairOutput> out;
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t i = 0; i < doc.mentions.size(); ++i) {
    if (doc.mentions[i].type != model.cfg.head_type) continue;
    for (std::size_t j = 0; j < doc.mentions.size(); ++j) {
      if (i == j || doc.mentions[j].type != model.cfg.tail_type) continue;
      if (doc.mentions[i].entity_ref == doc.mentions[j].entity_ref) continue;
      pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  if (pairs.empty()) return out;

  GraphBuild g = build_document_graph(model, doc, train_mode, rng);
  EdgeMatrix final_edges = run_inference(g.edges, model.infer);
  for (auto [hm, tm] : pairs) {
    int he = doc.mentions[hm].entity_ref;
    int te = doc.mentions[tm].entity_ref;
    int gold = model.cfg.no_relation_class();
    for (const RelationLabel& r : doc.relations) {
      if (r.head_entity == he && r.tail_entity == te) {
        gold = r.category;
        break;
      }
    }
    Tensor edge = final_edges.cell_or_zero(g.nodes.mention_node(hm),
                                           g.nodes.mention_node(tm));
    out.push_back(MentionPairOutput{hm, tm, he, te, gold,
                                    classify_pair(edge, model.cls, model.cfg.dropout_cls,
                                                  train_mode, rng)});
  }
  return out;
}

std::vector<PairPrediction> predict(const Model& model, std::span<const Document> docs) {
  SplitRng rng(0);  // evaluation mode draws nothing
  const int no_rel = model.cfg.no_relation_class();
  std::vector<PairPrediction> out;

  for (const Document& doc : docs) {
    std::vector<LabeledPair> pairs =
        generate_pairs(doc, model.cfg.head_type, model.cfg.tail_type, no_rel);
    if (pairs.empty()) continue;

    std::map<std::pair<std::string, std::string>, int> merged;
    if (model.cfg.variant == Variant::Sent) {
      for (const Document& sub : split_into_sentence_documents(doc)) {
        for (const MentionPairOutput& mp :
             forward_sentence_pairs(model, sub, false, rng)) {
          auto key = std::make_pair(sub.entities[mp.head_entity].kb_id,
                                    sub.entities[mp.tail_entity].kb_id);
          int cls = decide(mp.probs);
          auto it = merged.find(key);
          if (it == merged.end()) {
            merged.emplace(key, cls);
          } else if (it->second == no_rel && cls != no_rel) {
            it->second = cls;  // any positive mention-level pair wins
          }
        }
      }
    }

    std::vector<PairOutput> outputs;
    if (model.cfg.variant != Variant::Sent) {
      outputs = forward_document(model, doc, false, rng);
    }

    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const LabeledPair& pair = pairs[p];
      PairPrediction pred;
      pred.doc_id = doc.doc_id;
      pred.head_id = doc.entities[pair.head_entity].kb_id;
      pred.tail_id = doc.entities[pair.tail_entity].kb_id;
      pred.gold = pair.category;
      auto [intra, dist] = pair_locality(doc, pair.head_entity, pair.tail_entity);
      pred.intra = intra;
      pred.min_sentence_distance = dist;
      if (model.cfg.variant == Variant::Sent) {
        auto it = merged.find(std::make_pair(pred.head_id, pred.tail_id));
        pred.predicted = it == merged.end() ? no_rel : it->second;
      } else {
        pred.predicted = decide(outputs[p].probs);
      }
      out.push_back(std::move(pred));
    }
  }
  return out;
}

}  // namespace eog
