#include "eog/gradcheck.hpp"

#include "eog/model.hpp"
#include "eog/rng.hpp"
#include "eog/trainer.hpp"

namespace eog {

namespace {

Document tiny_document() {
  Document doc;
  doc.doc_id = "toy";
  doc.sentences = {
      Sentence{0, {"alpha", "beta", "gamma", "delta"}, 0, 22},
      Sentence{1, {"epsilon", "zeta", "eta"}, 23, 39},
  };
  doc.mentions = {
      Mention{0, 0, 1, 0, SemanticType::Chemical, "alpha"},
      Mention{0, 2, 3, 1, SemanticType::Disease, "gamma"},
      Mention{1, 0, 1, 0, SemanticType::Chemical, "epsilon"},
      Mention{1, 1, 2, 2, SemanticType::Disease, "zeta"},
  };
  doc.entities = {
      Entity{"C1", SemanticType::Chemical, {0, 2}},
      Entity{"D1", SemanticType::Disease, {1}},
      Entity{"D2", SemanticType::Disease, {3}},
  };
  doc.relations = {RelationLabel{0, 1, 0, "CID"}};
  return doc;
}

ModelConfig tiny_config() {
  ModelConfig mc;
  mc.word_dim = 5;
  mc.hidden_dim = 3;
  mc.type_dim = 2;
  mc.dist_dim = 3;
  mc.edge_dim = 4;
  mc.relation_classes = 2;
  mc.beta = 0.8;
  mc.iterations = 2;
  mc.dropout_word = 0.0;
  mc.dropout_cls = 0.0;
  return mc;
}

std::vector<NamedParam> select(std::vector<NamedParam> params,
                               const std::string& prefix) {
  std::vector<NamedParam> out;
  for (NamedParam& p : params) {
    if (p.name.rfind(prefix, 0) == 0) out.push_back(p);
  }
  return out;
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck(std::uint64_t seed) {
  const double eps = 1e-4;
  Document doc = tiny_document();
  std::vector<Document> docs = {doc};
  Vocabulary vocab = Vocabulary::build(docs);
  SplitRng rng(seed);
  Model model = init_model(tiny_config(), vocab, rng);

  SplitRng forward_rng(0);
  auto loss_fn = [&]() {
    std::vector<Tensor> probs;
    std::vector<int> golds;
    for (PairOutput& pair : forward_document(model, doc, false, forward_rng)) {
      probs.push_back(pair.probs);
      golds.push_back(pair.gold);
    }
    std::vector<Tensor> l2 = model.l2_weights();
    return pair_loss(probs, golds, l2, 1e-3);
  };

  std::vector<GradCheckResult> results;
  auto run = [&](const std::string& name, const std::string& prefix) {
    std::vector<NamedParam> params = select(model.parameters(), prefix);
    results.push_back({name, finite_difference_check(loss_fn, params, eps)});
  };
  run("embeddings", "word_emb");
  run("bilstm", "encoder.");
  run("node_and_distance_tables", "graph.");
  run("edge_reductions", "reduce.");
  run("bilinear_inference", "inference.");
  run("classifier", "classifier.");

  // attention path in isolation: context vector of the first mention pair
  {
    auto attention_loss = [&]() {
      const Sentence& s = doc.sentences[0];
      std::vector<int> ids(s.tokens.size());
      for (std::size_t t = 0; t < s.tokens.size(); ++t) {
        ids[t] = model.vocab.lookup(s.tokens[t]);
      }
      Tensor h = encode_sentence(model.encoder, ids, false, forward_rng);
      const Mention& m1 = doc.mentions[0];
      const Mention& m2 = doc.mentions[1];
      std::vector<int> span1, span2;
      for (int t = m1.token_start; t < m1.token_end; ++t) span1.push_back(t);
      for (int t = m2.token_start; t < m2.token_end; ++t) span2.push_back(t);
      Tensor c = mm_context(mean_rows(h, span1), mean_rows(h, span2), h,
                            {m1.token_start, m1.token_end},
                            {m2.token_start, m2.token_end});
      return mean_all(c);
    };
    std::vector<NamedParam> params = select(model.parameters(), "encoder.");
    std::vector<NamedParam> emb = select(model.parameters(), "word_emb");
    params.insert(params.end(), emb.begin(), emb.end());
    results.push_back({"attention_path",
                       finite_difference_check(attention_loss, params, eps)});
  }

  {
    std::vector<NamedParam> params = model.parameters();
    results.push_back({"full_model", finite_difference_check(loss_fn, params, eps)});
  }
  return results;
}

}  // namespace eog
