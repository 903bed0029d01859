#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "eog/corpus.hpp"
#include "eog/eval.hpp"
#include "eog/gradcheck.hpp"
#include "eog/inference.hpp"
#include "eog/model.hpp"
#include "eog/rng.hpp"
#include "eog/sweep.hpp"
#include "eog/trainer.hpp"

namespace py = pybind11;
using namespace eog;

namespace {

py::dict split_dict(const SplitCounts& c) {
  py::dict d;
  d["p"] = c.precision;
  d["r"] = c.recall;
  d["f1"] = c.f1;
  d["tp"] = c.tp;
  d["fp"] = c.fp;
  d["fn"] = c.fn;
  return d;
}

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["overall"] = split_dict(m.overall);
  d["intra"] = split_dict(m.intra);
  d["inter"] = split_dict(m.inter);
  return d;
}

TrainConfig config_from_kwargs(const py::kwargs& kwargs) {
  TrainConfig config;
  for (auto item : kwargs) {
    const std::string key = py::str(item.first);
    const std::string value = py::str(item.second);
    apply_config_key(config, key, value);
  }
  validate_config(config);
  return config;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "edge-oriented document-graph relation extraction core";

  py::enum_<SemanticType>(m, "SemanticType")
      .value("Chemical", SemanticType::Chemical)
      .value("Disease", SemanticType::Disease)
      .value("Gene", SemanticType::Gene);

  py::class_<Sentence>(m, "Sentence")
      .def_readonly("index", &Sentence::index)
      .def_readonly("tokens", &Sentence::tokens)
      .def_readonly("char_start", &Sentence::char_start)
      .def_readonly("char_end", &Sentence::char_end);

  py::class_<Mention>(m, "Mention")
      .def_readonly("sentence_index", &Mention::sentence_index)
      .def_readonly("token_start", &Mention::token_start)
      .def_readonly("token_end", &Mention::token_end)
      .def_readonly("entity_ref", &Mention::entity_ref)
      .def_readonly("type", &Mention::type)
      .def_readonly("surface", &Mention::surface);

  py::class_<Entity>(m, "Entity")
      .def_readonly("kb_id", &Entity::kb_id)
      .def_readonly("type", &Entity::type)
      .def_readonly("mention_refs", &Entity::mention_refs);

  py::class_<RelationLabel>(m, "RelationLabel")
      .def_readonly("head_entity", &RelationLabel::head_entity)
      .def_readonly("tail_entity", &RelationLabel::tail_entity)
      .def_readonly("category", &RelationLabel::category)
      .def_readonly("rel_type", &RelationLabel::rel_type);

  py::class_<Document>(m, "Document")
      .def_readonly("doc_id", &Document::doc_id)
      .def_readonly("sentences", &Document::sentences)
      .def_readonly("mentions", &Document::mentions)
      .def_readonly("entities", &Document::entities)
      .def_readonly("relations", &Document::relations)
      .def("to_json", &document_to_json)
      .def_static("from_json", &document_from_json);

  m.def(
      "parse_pubtator",
      [](const std::string& text, const std::vector<std::string>& relation_types) {
        ParseOptions opts;
        opts.relation_types = relation_types;
        return parse_pubtator(text, opts).documents;
      },
      py::arg("text"), py::arg("relation_types") = std::vector<std::string>{"CID"});

  m.def("fallback_tokenize", &fallback_tokenize, py::arg("text"));
  m.def("filter_ungrounded", &filter_ungrounded, py::arg("doc"));
  m.def(
      "generate_pairs",
      [](const Document& doc, SemanticType head, SemanticType tail, int no_rel) {
        py::list out;
        for (const LabeledPair& p : generate_pairs(doc, head, tail, no_rel)) {
          out.append(py::make_tuple(p.head_entity, p.tail_entity, p.category));
        }
        return out;
      },
      py::arg("doc"), py::arg("head_type"), py::arg("tail_type"),
      py::arg("no_relation_class") = 1);

  py::class_<PairPrediction>(m, "PairPrediction")
      .def(py::init([](std::string doc_id, std::string head, std::string tail,
                       int predicted, int gold, bool intra, int distance) {
             return PairPrediction{std::move(doc_id), std::move(head), std::move(tail),
                                   predicted,         gold,            intra,
                                   distance};
           }),
           py::arg("doc_id"), py::arg("head_id"), py::arg("tail_id"),
           py::arg("predicted"), py::arg("gold"), py::arg("intra") = false,
           py::arg("distance") = 0)
      .def_readonly("doc_id", &PairPrediction::doc_id)
      .def_readonly("head_id", &PairPrediction::head_id)
      .def_readonly("tail_id", &PairPrediction::tail_id)
      .def_readonly("predicted", &PairPrediction::predicted)
      .def_readonly("gold", &PairPrediction::gold)
      .def_readonly("intra", &PairPrediction::intra)
      .def_readonly("min_sentence_distance", &PairPrediction::min_sentence_distance);

  m.def(
      "score",
      [](const std::vector<PairPrediction>& preds, int no_rel) {
        return metrics_dict(score(preds, no_rel));
      },
      py::arg("predictions"), py::arg("no_relation_class"));

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init([](const py::kwargs& kwargs) { return config_from_kwargs(kwargs); }))
      .def("set", &apply_config_key)
      .def("__str__", &config_to_string)
      .def_property_readonly("hash", &config_hash);

  py::class_<Checkpoint>(m, "Checkpoint")
      .def_property_readonly("best_dev_f1",
                             [](const Checkpoint& c) { return c.best_dev_f1; })
      .def_property_readonly("epoch", [](const Checkpoint& c) { return c.epoch; })
      .def("save", &save_checkpoint, py::arg("path"))
      .def_static("load", &load_checkpoint, py::arg("path"));

  m.def(
      "train",
      [](TrainConfig config, const std::vector<Document>& train_docs,
         const std::vector<Document>& dev_docs) {
        validate_config(config);
        Vocabulary vocab = Vocabulary::build(train_docs);
        TrainResult result = train(config, train_docs, dev_docs, vocab);
        py::list log;
        for (const EpochRecord& rec : result.log) log.append(epoch_record_json(rec));
        return py::make_tuple(result.checkpoint, log);
      },
      py::arg("config"), py::arg("train_docs"),
      py::arg("dev_docs") = std::vector<Document>{});

  m.def(
      "evaluate",
      [](const Checkpoint& ckpt, const std::vector<Document>& docs) {
        Model model = model_from_checkpoint(ckpt);
        std::vector<PairPrediction> preds = predict(model, docs);
        Metrics metrics = score(preds, model.cfg.no_relation_class());
        return py::make_tuple(metrics_dict(metrics), preds);
      },
      py::arg("checkpoint"), py::arg("docs"));

  m.def(
      "gradcheck",
      [](std::uint64_t seed) {
        py::dict out;
        for (const GradCheckResult& r : run_gradcheck(seed)) {
          out[py::str(r.name)] = r.max_rel_err;
        }
        return out;
      },
      py::arg("seed") = 7);

  m.def("reachable_mask", &run_inference_mask, py::arg("mask"), py::arg("nodes"),
        py::arg("iterations"),
        "existence mask after N inference steps (path length <= 2^N)");
}
