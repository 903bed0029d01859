#include "eog/trainer.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "eog/errors.hpp"
#include "eog/rng.hpp"
#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace eog {

using nlohmann::json;

namespace {

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config key " + key + ": expected a boolean, got '" + value + "'");
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out;
  in >> out;
  if (in.fail() || !in.eof()) {
    throw ConfigError("config key " + key + ": invalid number '" + value + "'");
  }
  return out;
}

std::vector<std::string> parse_list(const std::string& value) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= value.size()) {
    std::size_t comma = value.find(',', pos);
    if (comma == std::string::npos) comma = value.size();
    std::string item = value.substr(pos, comma - pos);
    if (!item.empty()) out.push_back(item);
    pos = comma + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    out += items[i];
  }
  return out;
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

void apply_config_key(TrainConfig& c, const std::string& key, const std::string& value) {
  if (key == "word_dim") c.word_dim = parse_number<std::size_t>(key, value);
  else if (key == "hidden_dim") c.hidden_dim = parse_number<std::size_t>(key, value);
  else if (key == "node_type_dim") c.node_type_dim = parse_number<std::size_t>(key, value);
  else if (key == "distance_dim") c.distance_dim = parse_number<std::size_t>(key, value);
  else if (key == "edge_dim") c.edge_dim = parse_number<std::size_t>(key, value);
  else if (key == "variant") c.variant = value;
  else if (key == "iterations") c.iterations = parse_number<int>(key, value);
  else if (key == "beta") c.beta = parse_number<double>(key, value);
  else if (key == "edge_mm") c.edge_mm = parse_bool(key, value);
  else if (key == "edge_me") c.edge_me = parse_bool(key, value);
  else if (key == "edge_ms") c.edge_ms = parse_bool(key, value);
  else if (key == "edge_es") c.edge_es = parse_bool(key, value);
  else if (key == "edge_ss") c.edge_ss = parse_bool(key, value);
  else if (key == "edge_ss_indirect") c.edge_ss_indirect = parse_bool(key, value);
  else if (key == "node_types") c.node_types = parse_bool(key, value);
  else if (key == "mm_context") c.mm_context = parse_bool(key, value);
  else if (key == "distances") c.distances = parse_bool(key, value);
  else if (key == "relation_types") c.relation_types = parse_list(value);
  else if (key == "head_type") c.head_type = value;
  else if (key == "tail_type") c.tail_type = value;
  else if (key == "pair_filter") c.pair_filter = value;
  else if (key == "filter_training") c.filter_training = parse_bool(key, value);
  else if (key == "batch_size") c.batch_size = parse_number<int>(key, value);
  else if (key == "learning_rate") c.learning_rate = parse_number<double>(key, value);
  else if (key == "grad_clip") c.grad_clip = parse_number<double>(key, value);
  else if (key == "patience") c.patience = parse_number<int>(key, value);
  else if (key == "l2") c.l2 = parse_number<double>(key, value);
  else if (key == "dropout_word") c.dropout_word = parse_number<double>(key, value);
  else if (key == "dropout_cls") c.dropout_cls = parse_number<double>(key, value);
  else if (key == "max_epochs") c.max_epochs = parse_number<int>(key, value);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

TrainConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  TrainConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key=value");
    }
    apply_config_key(config, line.substr(0, eq), line.substr(eq + 1));
  }
  return config;
}

void validate_config(TrainConfig& c) {
  Variant v = variant_from(c.variant);
  if (v == Variant::NoInf) {
    if (c.iterations > 0) {
      throw ConfigError("variant noinf skips inference; iterations must be 0");
    }
    c.iterations = 0;
  } else if (c.iterations < 0) {
    c.iterations = 3;
  }
  if (c.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (c.patience < 1) throw ConfigError("patience must be >= 1");
  if (c.max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (c.beta < 0.0 || c.beta > 1.0) throw ConfigError("beta must lie in [0,1]");
  if (c.dropout_word < 0.0 || c.dropout_word >= 1.0 || c.dropout_cls < 0.0 ||
      c.dropout_cls >= 1.0) {
    throw ConfigError("dropout rates must lie in [0,1)");
  }
  if (c.learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
  if (c.grad_clip <= 0.0) throw ConfigError("grad_clip must be positive");
  if (c.l2 < 0.0) throw ConfigError("l2 must be non-negative");
  if (c.word_dim == 0 || c.hidden_dim == 0 || c.edge_dim == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if ((c.node_types && c.node_type_dim == 0) || (c.distances && c.distance_dim == 0)) {
    throw ConfigError("enabled embedding tables need positive dimensions");
  }
  if (c.relation_types.empty()) {
    throw ConfigError("relation_types must list at least one positive class");
  }
  semantic_type_from(c.head_type);
  semantic_type_from(c.tail_type);
}

std::string config_to_string(const TrainConfig& c) {
  std::map<std::string, std::string> kv;
  kv["word_dim"] = std::to_string(c.word_dim);
  kv["hidden_dim"] = std::to_string(c.hidden_dim);
  kv["node_type_dim"] = std::to_string(c.node_type_dim);
  kv["distance_dim"] = std::to_string(c.distance_dim);
  kv["edge_dim"] = std::to_string(c.edge_dim);
  kv["variant"] = c.variant;
  kv["iterations"] = std::to_string(c.iterations);
  kv["beta"] = format_double(c.beta);
  kv["edge_mm"] = c.edge_mm ? "true" : "false";
  kv["edge_me"] = c.edge_me ? "true" : "false";
  kv["edge_ms"] = c.edge_ms ? "true" : "false";
  kv["edge_es"] = c.edge_es ? "true" : "false";
  kv["edge_ss"] = c.edge_ss ? "true" : "false";
  kv["edge_ss_indirect"] = c.edge_ss_indirect ? "true" : "false";
  kv["node_types"] = c.node_types ? "true" : "false";
  kv["mm_context"] = c.mm_context ? "true" : "false";
  kv["distances"] = c.distances ? "true" : "false";
  kv["relation_types"] = join(c.relation_types);
  kv["head_type"] = c.head_type;
  kv["tail_type"] = c.tail_type;
  kv["pair_filter"] = c.pair_filter;
  kv["filter_training"] = c.filter_training ? "true" : "false";
  kv["batch_size"] = std::to_string(c.batch_size);
  kv["learning_rate"] = format_double(c.learning_rate);
  kv["grad_clip"] = format_double(c.grad_clip);
  kv["patience"] = std::to_string(c.patience);
  kv["l2"] = format_double(c.l2);
  kv["dropout_word"] = format_double(c.dropout_word);
  kv["dropout_cls"] = format_double(c.dropout_cls);
  kv["max_epochs"] = std::to_string(c.max_epochs);
  kv["seed"] = std::to_string(c.seed);
  std::string out;
  for (const auto& [key, value] : kv) out += key + "=" + value + "\n";
  return out;
}

std::string config_hash(const TrainConfig& c) {
  const std::string text = config_to_string(c);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

ModelConfig model_config(const TrainConfig& c) {
  ModelConfig mc;
  mc.word_dim = c.word_dim;
  mc.hidden_dim = c.hidden_dim;
  mc.type_dim = c.node_type_dim;
  mc.dist_dim = c.distance_dim;
  mc.edge_dim = c.edge_dim;
  mc.relation_classes = static_cast<int>(c.relation_types.size()) + 1;
  mc.beta = c.beta;
  mc.iterations = c.iterations;
  mc.dropout_word = c.dropout_word;
  mc.dropout_cls = c.dropout_cls;
  mc.head_type = semantic_type_from(c.head_type);
  mc.tail_type = semantic_type_from(c.tail_type);
  mc.variant = variant_from(c.variant);
  mc.flags.mm = c.edge_mm;
  mc.flags.me = c.edge_me;
  mc.flags.ms = c.edge_ms;
  mc.flags.es = c.edge_es;
  mc.flags.ss = c.edge_ss;
  mc.flags.ss_indirect = c.edge_ss_indirect;
  mc.flags.node_types = c.node_types;
  mc.flags.mm_context = c.mm_context;
  mc.flags.distances = c.distances;
  mc.flags.full = mc.variant == Variant::Full;
  return mc;
}

// --- checkpoint ---------------------------------------------------------------

namespace {

constexpr const char* kCheckpointMagic = "EOG-CHECKPOINT v1";

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint to " + path);
  json manifest;
  manifest["version"] = ckpt.version;
  manifest["config"] = config_to_string(ckpt.config);
  manifest["vocab"] = ckpt.vocab.tokens();
  manifest["best_dev_f1"] = ckpt.best_dev_f1;
  manifest["epoch"] = ckpt.epoch;
  json tensors = json::array();
  for (const auto& [name, tensor] : ckpt.tensors) {
    tensors.push_back({{"name", name}, {"shape", tensor.shape()}});
  }
  manifest["tensors"] = tensors;
  out << kCheckpointMagic << "\n" << manifest.dump() << "\n";
  for (const auto& [name, tensor] : ckpt.tensors) {
    write_u32(out, static_cast<std::uint32_t>(tensor.rank()));
    for (std::size_t d : tensor.shape()) write_u64(out, d);
    out.write(reinterpret_cast<const char*>(tensor.values().data()),
              static_cast<std::streamsize>(tensor.size() * sizeof(double)));
  }
  if (!out) throw DataError("short write while saving checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint from " + path);
  std::string magic;
  std::getline(in, magic);
  if (magic != kCheckpointMagic) {
    throw DataError(path + " is not a checkpoint (bad format tag)");
  }
  std::string manifest_line;
  std::getline(in, manifest_line);
  json manifest;
  try {
    manifest = json::parse(manifest_line);
  } catch (const json::exception& e) {
    throw DataError("checkpoint manifest is invalid: " + std::string(e.what()));
  }
  Checkpoint ckpt;
  ckpt.version = manifest.at("version").get<int>();
  if (ckpt.version != 1) {
    throw DataError("unsupported checkpoint version " + std::to_string(ckpt.version));
  }
  {
    std::istringstream cfg_in(manifest.at("config").get<std::string>());
    std::string line;
    while (std::getline(cfg_in, line)) {
      if (line.empty()) continue;
      std::size_t eq = line.find('=');
      apply_config_key(ckpt.config, line.substr(0, eq), line.substr(eq + 1));
    }
  }
  for (const auto& token : manifest.at("vocab")) {
    ckpt.vocab.add(token.get<std::string>());
  }
  ckpt.best_dev_f1 = manifest.at("best_dev_f1").get<double>();
  ckpt.epoch = manifest.at("epoch").get<int>();
  for (const auto& t : manifest.at("tensors")) {
    const std::string name = t.at("name").get<std::string>();
    const auto shape = t.at("shape").get<std::vector<std::size_t>>();
    const std::uint32_t rank = read_u32(in);
    if (rank != shape.size()) {
      throw DataError("checkpoint tensor " + name + " has inconsistent rank");
    }
    std::vector<std::size_t> stored(rank);
    std::size_t count = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      stored[d] = static_cast<std::size_t>(read_u64(in));
      count *= stored[d];
    }
    if (stored != shape) {
      throw DataError("checkpoint tensor " + name + " has inconsistent shape");
    }
    std::vector<double> values(count);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw DataError("checkpoint truncated while reading tensor " + name);
    ckpt.tensors.emplace_back(name, Tensor::from(std::move(values), shape));
  }
  return ckpt;
}

Checkpoint checkpoint_from_model(Model& model, const TrainConfig& config,
                                 double best_dev_f1, int epoch) {
  Checkpoint ckpt;
  ckpt.config = config;
  ckpt.vocab = model.vocab;
  ckpt.best_dev_f1 = best_dev_f1;
  ckpt.epoch = epoch;
  for (NamedParam& p : model.parameters()) {
    ckpt.tensors.emplace_back(p.name, p.tensor.clone());
  }
  return ckpt;
}

Model model_from_checkpoint(const Checkpoint& ckpt) {
  TrainConfig config = ckpt.config;
  validate_config(config);
  SplitRng rng(config.seed);
  Model model = init_model(model_config(config), ckpt.vocab, rng);
  std::map<std::string, Tensor> stored(ckpt.tensors.begin(), ckpt.tensors.end());
  for (NamedParam& p : model.parameters()) {
    auto it = stored.find(p.name);
    if (it == stored.end()) {
      throw DataError("checkpoint is missing tensor " + p.name);
    }
    if (it->second.shape() != p.tensor.shape()) {
      throw DataError("checkpoint tensor " + p.name + " has the wrong shape");
    }
    p.tensor.values() = it->second.values();
    stored.erase(it);
  }
  if (!stored.empty()) {
    throw DataError("checkpoint contains unknown tensor " + stored.begin()->first);
  }
  return model;
}

// --- training loop --------------------------------------------------------------

std::string epoch_record_json(const EpochRecord& rec) {
  json j;
  j["epoch"] = rec.epoch;
  j["train_loss"] = rec.train_loss;
  if (rec.has_dev) {
    auto split = [](const SplitCounts& c) {
      return json{{"p", c.precision}, {"r", c.recall}, {"f1", c.f1},
                  {"tp", c.tp},       {"fp", c.fp},    {"fn", c.fn}};
    };
    j["dev"] = {{"overall", split(rec.dev.overall)},
                {"intra", split(rec.dev.intra)},
                {"inter", split(rec.dev.inter)}};
  }
  return j.dump();
}

TrainResult train(const TrainConfig& config_in, const std::vector<Document>& train_docs,
                  const std::vector<Document>& dev_docs, const Vocabulary& vocab,
                  const Tensor* pretrained_words, std::ostream* console) {
  TrainConfig config = config_in;
  validate_config(config);
  if (train_docs.empty()) throw DataError("train: empty training set");

  std::set<PairKey> filter;
  if (!config.pair_filter.empty()) filter = load_pair_filter(config.pair_filter);

  SplitRng rng(config.seed);
  Model model = init_model(model_config(config), vocab, rng, pretrained_words);
  const bool sent = model.cfg.variant == Variant::Sent;

  // the sentence variant trains on exploded single-sentence documents
  std::vector<Document> units;
  if (sent) {
    for (const Document& doc : train_docs) {
      for (Document& sub : split_into_sentence_documents(doc)) {
        units.push_back(std::move(sub));
      }
    }
  } else {
    units = train_docs;
  }

  auto excluded = [&](const Document& doc, int head_entity, int tail_entity) {
    if (!config.filter_training || filter.empty()) return false;
    return filter.count({doc.doc_id, doc.entities[head_entity].kb_id,
                         doc.entities[tail_entity].kb_id}) != 0;
  };

  std::vector<NamedParam> params = model.parameters();
  std::vector<Tensor> l2 = model.l2_weights();
  AdamState adam(config.learning_rate);

  TrainResult result;
  double best_f1 = -1.0;
  int best_epoch = 0;
  int epochs_without_improvement = 0;
  std::vector<std::pair<std::string, Tensor>> best_params;

  std::vector<int> order(units.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    rng.shuffle(order);

    double loss_sum = 0.0;
    int batch_count = 0;
    for (std::size_t batch_start = 0; batch_start < order.size();
         batch_start += config.batch_size) {
      const int batch_index = static_cast<int>(batch_start / config.batch_size);
      Tape tape;
      std::vector<Tensor> probs;
      std::vector<int> golds;
      for (std::size_t b = batch_start;
           b < std::min(order.size(), batch_start + config.batch_size); ++b) {
        const Document& doc = units[order[b]];
        if (sent) {
          for (MentionPairOutput& mp : forward_sentence_pairs(model, doc, true, rng)) {
            if (excluded(doc, mp.head_entity, mp.tail_entity)) continue;
            probs.push_back(mp.probs);
            golds.push_back(mp.gold);
          }
        } else {
          for (PairOutput& pair : forward_document(model, doc, true, rng)) {
            if (excluded(doc, pair.head_entity, pair.tail_entity)) continue;
            probs.push_back(pair.probs);
            golds.push_back(pair.gold);
          }
        }
      }
      if (probs.empty()) continue;
      Tensor loss = pair_loss(probs, golds, l2, config.l2);
      if (!std::isfinite(loss.value())) {
        throw DivergenceError(epoch, batch_index, "non-finite loss");
      }
      loss_sum += loss.value();
      ++batch_count;
      tape.backward(loss);
      clip_global_norm(params, config.grad_clip);
      adam.step(params);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = batch_count > 0 ? loss_sum / batch_count : 0.0;
    if (!dev_docs.empty()) {
      std::vector<PairPrediction> preds = predict(model, dev_docs);
      if (!filter.empty()) preds = apply_pair_filter(preds, filter);
      rec.has_dev = true;
      rec.dev = score(preds, model.cfg.no_relation_class());
    }
    result.log.push_back(rec);

    if (console) {
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start)
              .count();
      (*console) << "epoch " << epoch << " loss " << rec.train_loss;
      if (rec.has_dev) {
        (*console) << " dev_f1 " << rec.dev.overall.f1 << " (intra " << rec.dev.intra.f1
                   << ", inter " << rec.dev.inter.f1 << ")";
      }
      (*console) << " [" << seconds << "s]\n";
    }

    if (rec.has_dev) {
      if (rec.dev.overall.f1 > best_f1) {
        best_f1 = rec.dev.overall.f1;
        best_epoch = epoch;
        epochs_without_improvement = 0;
        best_params.clear();
        for (NamedParam& p : params) {
          best_params.emplace_back(p.name, p.tensor.clone());
        }
      } else {
        ++epochs_without_improvement;
        if (epochs_without_improvement >= config.patience) break;
      }
    }
  }

  if (!best_params.empty()) {
    for (NamedParam& p : params) {
      for (auto& [name, tensor] : best_params) {
        if (name == p.name) {
          p.tensor.values() = tensor.values();
          break;
        }
      }
    }
  } else {
    best_epoch = static_cast<int>(result.log.size());
    best_f1 = 0.0;
  }
  result.checkpoint = checkpoint_from_model(model, config, std::max(best_f1, 0.0),
                                            best_epoch);
  return result;
}

}  // namespace eog
