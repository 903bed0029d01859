// Command-line front end: prepare / train / evaluate / analyze / gradcheck.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "eog/errors.hpp"
#include "eog/gradcheck.hpp"
#include "eog/model.hpp"
#include "eog/rng.hpp"
#include "eog/sweep.hpp"
#include "eog/trainer.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace eog;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

TrainConfig build_config(const std::string& config_path,
                         const std::vector<std::string>& overrides) {
  TrainConfig config;
  if (!config_path.empty()) config = read_config_file(config_path);
  for (const std::string& kv : overrides) {
    std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--set expects key=value, got '" + kv + "'");
    }
    apply_config_key(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  validate_config(config);
  return config;
}

void print_metrics(std::ostream& out, const Metrics& m) {
  auto line = [&](const char* name, const SplitCounts& c) {
    out << std::left << std::setw(9) << name << std::right << std::fixed
        << std::setprecision(4) << std::setw(8) << c.precision << std::setw(9)
        << c.recall << std::setw(9) << c.f1 << std::setw(8) << c.tp << std::setw(7)
        << c.fp << std::setw(7) << c.fn << "\n";
  };
  out << std::left << std::setw(9) << "" << std::right << std::setw(8) << "P"
      << std::setw(9) << "R" << std::setw(9) << "F1" << std::setw(8) << "TP"
      << std::setw(7) << "FP" << std::setw(7) << "FN" << "\n";
  line("overall", m.overall);
  line("intra", m.intra);
  line("inter", m.inter);
}

json metrics_json(const Metrics& m) {
  auto split = [](const SplitCounts& c) {
    return json{{"p", c.precision}, {"r", c.recall}, {"f1", c.f1},
                {"tp", c.tp},       {"fp", c.fp},    {"fn", c.fn}};
  };
  return json{{"overall", split(m.overall)},
              {"intra", split(m.intra)},
              {"inter", split(m.inter)}};
}

std::vector<PairPrediction> checkpoint_predictions(const Checkpoint& ckpt,
                                                   const std::vector<Document>& docs,
                                                   const std::string& filter_path) {
  Model model = model_from_checkpoint(ckpt);
  std::vector<PairPrediction> preds = predict(model, docs);
  std::string filter = filter_path.empty() ? ckpt.config.pair_filter : filter_path;
  if (!filter.empty()) preds = apply_pair_filter(preds, load_pair_filter(filter));
  return preds;
}

int run_prepare(const std::string& input, const std::string& format,
                const std::string& out_dir, bool keep_ungrounded,
                const std::vector<std::string>& relation_types) {
  fs::create_directories(out_dir);
  std::vector<Document> docs;
  int dropped_entity = 0, dropped_type = 0;
  if (format == "pubtator") {
    ParseOptions opts;
    if (!relation_types.empty()) opts.relation_types = relation_types;
    ParseResult parsed = parse_pubtator(read_file(input), opts);
    docs = std::move(parsed.documents);
    dropped_entity = parsed.relations_unknown_entity;
    dropped_type = parsed.relations_unknown_type;
  } else if (format == "jsonl") {
    docs = read_documents(input);
  } else {
    throw ConfigError("unknown input format '" + format + "'");
  }
  if (!keep_ungrounded) {
    for (Document& doc : docs) doc = filter_ungrounded(doc);
  }
  for (const Document& doc : docs) validate_document(doc);
  Vocabulary vocab = Vocabulary::build(docs);

  const std::string docs_path = (fs::path(out_dir) / "docs.jsonl").string();
  const std::string vocab_path = (fs::path(out_dir) / "vocab.txt").string();
  write_documents(docs_path, docs);
  vocab.save(vocab_path);

  std::size_t mentions = 0, entities = 0, relations = 0;
  for (const Document& d : docs) {
    mentions += d.mentions.size();
    entities += d.entities.size();
    relations += d.relations.size();
  }
  std::cout << "documents " << docs.size() << ", mentions " << mentions
            << ", entities " << entities << ", relations " << relations
            << ", vocabulary " << vocab.size() << "\n";
  if (dropped_entity || dropped_type) {
    std::cout << "warning: dropped " << dropped_entity
              << " relation(s) with unknown KB ids and " << dropped_type
              << " with unknown relation types\n";
  }
  std::cout << "wrote " << docs_path << " and " << vocab_path << "\n";
  return 0;
}

int run_train(const TrainConfig& config, const std::string& train_path,
              const std::string& dev_path, const std::string& vocab_path,
              const std::string& embeddings_path, const std::string& out_dir,
              bool merge_dev_into_train) {
  std::vector<Document> train_docs = read_documents(train_path);
  std::vector<Document> dev_docs;
  if (!dev_path.empty()) dev_docs = read_documents(dev_path);

  Vocabulary vocab = vocab_path.empty() ? Vocabulary::build(train_docs)
                                        : Vocabulary::load(vocab_path);

  if (merge_dev_into_train) {
    train_docs = merge_train_dev(train_docs, dev_docs);
    dev_docs.clear();
  }

  Tensor pretrained;
  const Tensor* pretrained_ptr = nullptr;
  if (!embeddings_path.empty()) {
    SplitRng emb_rng(config.seed);
    EmbeddingLoad load = load_embeddings(embeddings_path, vocab, config.word_dim,
                                         emb_rng);
    std::cout << "embeddings: " << load.file_rows << " rows, coverage "
              << std::fixed << std::setprecision(3) << load.coverage << "\n";
    pretrained = load.table;
    pretrained_ptr = &pretrained;
  }

  const fs::path run_dir = fs::path(out_dir) / ("run-" + config_hash(config));
  fs::create_directories(run_dir);
  {
    std::ofstream cfg_out(run_dir / "config.txt");
    cfg_out << config_to_string(config);
  }

  TrainResult result =
      train(config, train_docs, dev_docs, vocab, pretrained_ptr, &std::cout);

  {
    std::ofstream log_out(run_dir / "train_log.jsonl");
    for (const EpochRecord& rec : result.log) {
      log_out << epoch_record_json(rec) << "\n";
    }
  }
  save_checkpoint(result.checkpoint, (run_dir / "checkpoint.eog").string());
  std::cout << "best dev F1 " << std::fixed << std::setprecision(4)
            << result.checkpoint.best_dev_f1 << " at epoch "
            << result.checkpoint.epoch << "\n";
  std::cout << "artifacts in " << run_dir.string() << "\n";
  return 0;
}

int run_evaluate(const std::string& checkpoint_path, const std::string& data_path,
                 const std::string& filter_path, const std::string& out_dir) {
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  std::vector<Document> docs = read_documents(data_path);
  std::vector<PairPrediction> preds = checkpoint_predictions(ckpt, docs, filter_path);
  const int no_rel = static_cast<int>(ckpt.config.relation_types.size());
  Metrics metrics = score(preds, no_rel);
  print_metrics(std::cout, metrics);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream mj(fs::path(out_dir) / "metrics.json");
    mj << metrics_json(metrics).dump(2) << "\n";
    std::ofstream pj(fs::path(out_dir) / "predictions.jsonl");
    for (const PairPrediction& p : preds) {
      pj << json{{"doc_id", p.doc_id},   {"head", p.head_id},
                 {"tail", p.tail_id},    {"predicted", p.predicted},
                 {"gold", p.gold},       {"intra", p.intra},
                 {"distance", p.min_sentence_distance}}
                .dump()
         << "\n";
    }
  }
  return 0;
}

int run_analyze(const std::string& data_path, const std::string& dump_path,
                bool stats, const std::string& checkpoint_path,
                const std::string& breakdown_path, const std::string& sweep_preset,
                const std::string& train_path, const std::string& dev_path,
                const std::string& vocab_path, const TrainConfig& config,
                const std::string& out_path) {
  std::vector<Document> docs = read_documents(data_path);

  if (!dump_path.empty() || stats) {
    // graph structure does not depend on learned values; a throwaway model
    // at tiny dimensions drives the real construction path
    TrainConfig tiny = config;
    tiny.word_dim = 4;
    tiny.hidden_dim = 2;
    tiny.node_type_dim = 2;
    tiny.distance_dim = 2;
    tiny.edge_dim = 2;
    Vocabulary vocab = Vocabulary::build(docs);
    SplitRng rng(tiny.seed);
    Model model = init_model(model_config(tiny), vocab, rng);
    std::map<std::string, long> family_counts;
    std::ofstream dump;
    if (!dump_path.empty()) dump.open(dump_path);
    SplitRng fwd_rng(0);
    for (const Document& doc : docs) {
      GraphBuild g = build_document_graph(model, doc, false, fwd_rng);
      for (const EdgeRecord& rec : edge_records(g.nodes, g.raw)) {
        ++family_counts[rec.family];
        if (dump.is_open()) {
          dump << json{{"doc_id", doc.doc_id}, {"family", rec.family},
                       {"a_kind", rec.kind_a}, {"a_index", rec.index_a},
                       {"b_kind", rec.kind_b}, {"b_index", rec.index_b},
                       {"exists", true}}
                      .dump()
               << "\n";
        }
      }
    }
    if (stats) {
      std::cout << "edge counts:";
      for (const auto& [family, count] : family_counts) {
        std::cout << " " << family << "=" << count;
      }
      std::cout << "\n";
    }
    if (!dump_path.empty()) std::cout << "graph dump written to " << dump_path << "\n";
  }

  if (!breakdown_path.empty()) {
    if (checkpoint_path.empty()) {
      throw ConfigError("--distance-breakdown needs --checkpoint");
    }
    Checkpoint ckpt = load_checkpoint(checkpoint_path);
    std::vector<PairPrediction> preds = checkpoint_predictions(ckpt, docs, "");
    const int no_rel = static_cast<int>(ckpt.config.relation_types.size());
    std::ofstream out(breakdown_path);
    out << "distance\ttp\tfp\tfn\tprecision\trecall\tf1\n";
    for (const DistanceF1& d : distance_breakdown(preds, no_rel)) {
      out << d.distance << "\t" << d.counts.tp << "\t" << d.counts.fp << "\t"
          << d.counts.fn << "\t" << d.counts.precision << "\t" << d.counts.recall
          << "\t" << d.counts.f1 << "\n";
    }
    std::cout << "distance breakdown written to " << breakdown_path << "\n";
  }

  if (!sweep_preset.empty()) {
    if (train_path.empty()) throw ConfigError("--sweep needs --train");
    std::vector<Document> train_docs = read_documents(train_path);
    std::vector<Document> dev_docs;
    if (!dev_path.empty()) dev_docs = read_documents(dev_path);
    Vocabulary vocab = vocab_path.empty() ? Vocabulary::build(train_docs)
                                          : Vocabulary::load(vocab_path);
    std::vector<SweepPoint> grid;
    if (sweep_preset == "edges") grid = edge_ablation_grid(config);
    else if (sweep_preset == "enhancements") grid = enhancement_grid(config);
    else if (sweep_preset == "iterations") grid = iteration_grid(config);
    else throw ConfigError("unknown sweep preset '" + sweep_preset + "'");

    std::vector<SweepResult> results =
        ablation_sweep(grid, train_docs, dev_docs, docs, vocab);
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
      file.open(out_path);
      out = &file;
    }
    (*out) << "label\toverall_p\toverall_r\toverall_f1\tintra_f1\tinter_f1\tstatus\n";
    for (const SweepResult& r : results) {
      if (r.ok) {
        (*out) << r.label << "\t" << r.metrics.overall.precision << "\t"
               << r.metrics.overall.recall << "\t" << r.metrics.overall.f1 << "\t"
               << r.metrics.intra.f1 << "\t" << r.metrics.inter.f1 << "\tok\n";
      } else {
        (*out) << r.label << "\t-\t-\t-\t-\t-\tfailed: " << r.error << "\n";
      }
    }
    if (!out_path.empty()) std::cout << "sweep table written to " << out_path << "\n";
  }
  return 0;
}

int run_gradcheck_cmd(std::uint64_t seed) {
  bool ok = true;
  for (const GradCheckResult& r : run_gradcheck(seed)) {
    const bool pass = r.max_rel_err < 1e-3;
    ok = ok && pass;
    std::cout << std::left << std::setw(28) << r.name << std::scientific
              << std::setprecision(3) << r.max_rel_err << (pass ? "  ok" : "  FAIL")
              << "\n";
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edge-oriented document-graph relation extraction"};
  app.require_subcommand(1);

  // prepare
  auto* prepare = app.add_subcommand("prepare", "parse and serialize a corpus");
  std::string prep_input, prep_format = "pubtator", prep_out = ".";
  bool keep_ungrounded = false;
  std::vector<std::string> prep_relations;
  prepare->add_option("--input", prep_input, "PubTator or jsonl input file")
      ->required();
  prepare->add_option("--input-format", prep_format, "pubtator|jsonl");
  prepare->add_option("--out", prep_out, "output directory");
  prepare->add_flag("--keep-ungrounded", keep_ungrounded,
                    "keep mentions without a KB id");
  prepare->add_option("--relation-types", prep_relations,
                      "positive relation line types (default CID)");

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model");
  std::string train_path, train_dev, train_vocab, train_emb, train_cfg,
      train_out = ".";
  bool merge_dev = false;
  std::vector<std::string> overrides;
  train_cmd->add_option("--train", train_path, "training docs.jsonl")->required();
  train_cmd->add_option("--dev", train_dev, "development docs.jsonl");
  train_cmd->add_option("--vocab", train_vocab, "vocabulary file");
  train_cmd->add_option("--embeddings", train_emb, "pretrained embedding text file");
  train_cmd->add_option("--config", train_cfg, "key=value config file");
  train_cmd->add_option("--out", train_out, "output directory");
  train_cmd->add_flag("--merge-train-dev", merge_dev,
                      "train on the union of train and dev");
  train_cmd->add_option("--set", overrides, "config override key=value");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "score a checkpoint on a split");
  std::string eval_ckpt, eval_data, eval_filter, eval_out;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval_cmd->add_option("--data", eval_data, "docs.jsonl to score")->required();
  eval_cmd->add_option("--pair-filter", eval_filter, "pairs excluded from scoring");
  eval_cmd->add_option("--out", eval_out, "directory for metrics and predictions");

  // analyze
  auto* ana = app.add_subcommand("analyze", "graph dumps, breakdowns and sweeps");
  std::string ana_data, ana_dump, ana_ckpt, ana_breakdown, ana_sweep, ana_train,
      ana_dev, ana_vocab, ana_cfg, ana_out;
  bool ana_stats = false;
  std::vector<std::string> ana_overrides;
  ana->add_option("--data", ana_data, "docs.jsonl to analyze")->required();
  ana->add_option("--dump-graph", ana_dump, "write per-edge records here");
  ana->add_flag("--stats", ana_stats, "print edge-family counts");
  ana->add_option("--checkpoint", ana_ckpt, "checkpoint for prediction-based analyses");
  ana->add_option("--distance-breakdown", ana_breakdown,
                  "write per-distance inter-sentence F1 here");
  ana->add_option("--sweep", ana_sweep, "edges|enhancements|iterations");
  ana->add_option("--train", ana_train, "training docs for the sweep");
  ana->add_option("--dev", ana_dev, "dev docs for the sweep");
  ana->add_option("--vocab", ana_vocab, "vocabulary file for the sweep");
  ana->add_option("--config", ana_cfg, "key=value config file");
  ana->add_option("--set", ana_overrides, "config override key=value");
  ana->add_option("--out", ana_out, "sweep output table");

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient suites");
  std::uint64_t gc_seed = 7;
  gc->add_option("--seed", gc_seed, "fixture seed");

  try {
    app.parse(argc, argv);
    if (prepare->parsed()) {
      return run_prepare(prep_input, prep_format, prep_out, keep_ungrounded,
                         prep_relations);
    }
    if (train_cmd->parsed()) {
      TrainConfig config = build_config(train_cfg, overrides);
      return run_train(config, train_path, train_dev, train_vocab, train_emb,
                       train_out, merge_dev);
    }
    if (eval_cmd->parsed()) {
      return run_evaluate(eval_ckpt, eval_data, eval_filter, eval_out);
    }
    if (ana->parsed()) {
      TrainConfig config = build_config(ana_cfg, ana_overrides);
      return run_analyze(ana_data, ana_dump, ana_stats, ana_ckpt, ana_breakdown,
                         ana_sweep, ana_train, ana_dev, ana_vocab, config, ana_out);
    }
    if (gc->parsed()) {
      return run_gradcheck_cmd(gc_seed);
    }
  } catch (const CLI::ParseError& e) {
    // fold CLI11's assorted parse codes into the documented usage exit code
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
