#include "eog/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "eog/errors.hpp"
#include "eog/rng.hpp"
#include "json.hpp"

namespace eog {

using nlohmann::json;

const char* to_string(SemanticType t) {
  switch (t) {
    case SemanticType::Chemical: return "Chemical";
    case SemanticType::Disease: return "Disease";
    case SemanticType::Gene: return "Gene";
  }
  return "?";
}

SemanticType semantic_type_from(const std::string& s) {
  if (s == "Chemical") return SemanticType::Chemical;
  if (s == "Disease") return SemanticType::Disease;
  if (s == "Gene") return SemanticType::Gene;
  throw DataError("unknown semantic type '" + s + "'");
}

void validate_document(const Document& doc) {
  auto fail = [&](const std::string& what) {
    throw DataError("document " + doc.doc_id + ": " + what);
  };
  for (std::size_t m = 0; m < doc.mentions.size(); ++m) {
    const Mention& men = doc.mentions[m];
    if (men.sentence_index < 0 ||
        men.sentence_index >= static_cast<int>(doc.sentences.size()))
      fail("mention " + std::to_string(m) + " has sentence index out of bounds");
    const Sentence& s = doc.sentences[men.sentence_index];
    if (men.token_start < 0 || men.token_start >= men.token_end ||
        men.token_end > static_cast<int>(s.tokens.size()))
      fail("mention " + std::to_string(m) + " has token span out of bounds");
    if (men.entity_ref < 0 || men.entity_ref >= static_cast<int>(doc.entities.size()))
      fail("mention " + std::to_string(m) + " references a missing entity");
    const Entity& e = doc.entities[men.entity_ref];
    // Ungrounded mentions share one pseudo-entity whose type is unchecked.
    if (e.kb_id != "-1" && e.type != men.type)
      fail("mention " + std::to_string(m) + " type disagrees with entity " + e.kb_id);
  }
  std::set<std::string> ids;
  for (std::size_t e = 0; e < doc.entities.size(); ++e) {
    const Entity& ent = doc.entities[e];
    if (!ids.insert(ent.kb_id).second) fail("duplicate entity KB id " + ent.kb_id);
    if (ent.mention_refs.empty())
      fail("entity " + ent.kb_id + " has no mentions");
    for (int m : ent.mention_refs) {
      if (m < 0 || m >= static_cast<int>(doc.mentions.size()) ||
          doc.mentions[m].entity_ref != static_cast<int>(e))
        fail("entity " + ent.kb_id + " mention list is inconsistent");
    }
  }
  for (const RelationLabel& r : doc.relations) {
    if (r.head_entity < 0 || r.head_entity >= static_cast<int>(doc.entities.size()) ||
        r.tail_entity < 0 || r.tail_entity >= static_cast<int>(doc.entities.size()) ||
        r.head_entity == r.tail_entity)
      fail("relation references invalid entities");
  }
}

// --- tokenization -----------------------------------------------------------

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
bool starts_sentence(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  return std::isupper(u) != 0 || std::isdigit(u) != 0;
}

}  // namespace

TokenizedText fallback_tokenize_spans(const std::string& raw) {
  TokenizedText out;
  const std::size_t n = raw.size();
  // sentence boundaries: . ! ? followed by whitespace then uppercase/digit
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  std::size_t start = 0;
  for (std::size_t i = 0; i < n; ++i) {
    char c = raw[i];
    if (c == '.' || c == '!' || c == '?') {
      std::size_t j = i + 1;
      if (j < n && is_space(raw[j])) {
        while (j < n && is_space(raw[j])) ++j;
        if (j < n && starts_sentence(raw[j])) {
          ranges.emplace_back(start, i + 1);
          start = j;
          i = j - 1;
        }
      }
    }
  }
  if (start < n) ranges.emplace_back(start, n);

  for (auto [s, e] : ranges) {
    while (s < e && is_space(raw[s])) ++s;
    while (e > s && is_space(raw[e - 1])) --e;
    if (s >= e) continue;

    Sentence sent;
    sent.index = static_cast<int>(out.sentences.size());
    sent.char_start = s;
    sent.char_end = e;
    std::vector<std::pair<std::size_t, std::size_t>> spans;

    std::size_t t = s;
    while (t < e) {
      while (t < e && is_space(raw[t])) ++t;
      if (t >= e) break;
      std::size_t te = t;
      while (te < e && !is_space(raw[te])) ++te;
      // detach leading and trailing punctuation as separate tokens
      std::size_t core_s = t, core_e = te;
      while (core_e - core_s > 1 && is_punct(raw[core_s])) {
        sent.tokens.push_back(raw.substr(core_s, 1));
        spans.emplace_back(core_s, core_s + 1);
        ++core_s;
      }
      std::size_t trail = core_e;
      while (trail - core_s > 1 && is_punct(raw[trail - 1])) --trail;
      sent.tokens.push_back(raw.substr(core_s, trail - core_s));
      spans.emplace_back(core_s, trail);
      for (std::size_t p = trail; p < core_e; ++p) {
        sent.tokens.push_back(raw.substr(p, 1));
        spans.emplace_back(p, p + 1);
      }
      t = te;
    }
    out.sentences.push_back(std::move(sent));
    out.token_spans.push_back(std::move(spans));
  }
  return out;
}

std::vector<Sentence> fallback_tokenize(const std::string& raw) {
  return fallback_tokenize_spans(raw).sentences;
}

// --- PubTator ---------------------------------------------------------------

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t tab = line.find('\t', pos);
    if (tab == std::string::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
  return out;
}

struct RawAnnotation {
  std::size_t start, end;
  std::string surface, type, kb_id;
  int line_no;
};

struct RawRelation {
  std::string type, id1, id2;
  int line_no;
};

struct RawDoc {
  std::string pmid, title, abstract_text;
  bool has_title = false, has_abstract = false;
  std::vector<RawAnnotation> annotations;
  std::vector<RawRelation> relations;
};

Document assemble_document(const RawDoc& raw, const ParseOptions& opts,
                           ParseResult& result) {
  Document doc;
  doc.doc_id = raw.pmid;
  std::string text = raw.title;
  if (raw.has_abstract) {
    if (raw.has_title) text += " ";
    text += raw.abstract_text;
  }
  TokenizedText tok = fallback_tokenize_spans(text);
  doc.sentences = tok.sentences;

  std::vector<RawAnnotation> anns = raw.annotations;
  std::stable_sort(anns.begin(), anns.end(),
                   [](const RawAnnotation& a, const RawAnnotation& b) {
                     return a.start != b.start ? a.start < b.start : a.end < b.end;
                   });

  std::unordered_map<std::string, int> entity_of;
  for (const RawAnnotation& ann : anns) {
    if (ann.end > text.size() || ann.start >= ann.end) {
      throw DataError("line " + std::to_string(ann.line_no) +
                      ": annotation offsets [" + std::to_string(ann.start) + "," +
                      std::to_string(ann.end) + ") outside document " + raw.pmid);
    }
    // sentence owning the span start; spans crossing the split are clipped
    int si = -1;
    for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
      if (doc.sentences[s].char_end > ann.start) {
        si = static_cast<int>(s);
        break;
      }
    }
    if (si < 0) {
      throw DataError("line " + std::to_string(ann.line_no) +
                      ": annotation start not covered by any sentence");
    }
    const auto& spans = tok.token_spans[si];
    int t0 = -1, t1 = -1;
    for (std::size_t t = 0; t < spans.size(); ++t) {
      if (spans[t].second > ann.start && spans[t].first < ann.end) {
        if (t0 < 0) t0 = static_cast<int>(t);
        t1 = static_cast<int>(t) + 1;
      }
    }
    if (t0 < 0) {
      // start sits past every token of its sentence (whitespace gap); cover
      // the first token of the next overlap-free position
      throw DataError("line " + std::to_string(ann.line_no) +
                      ": annotation does not overlap any token");
    }
    SemanticType type;
    try {
      type = semantic_type_from(ann.type);
    } catch (const DataError&) {
      throw DataError("line " + std::to_string(ann.line_no) +
                      ": unknown annotation type '" + ann.type + "'");
    }

    int entity;
    auto it = entity_of.find(ann.kb_id);
    if (it == entity_of.end()) {
      entity = static_cast<int>(doc.entities.size());
      entity_of.emplace(ann.kb_id, entity);
      doc.entities.push_back(Entity{ann.kb_id, type, {}});
    } else {
      entity = it->second;
      if (doc.entities[entity].kb_id != "-1" && doc.entities[entity].type != type) {
        throw DataError("line " + std::to_string(ann.line_no) + ": entity " +
                        ann.kb_id + " annotated with conflicting types");
      }
    }
    int mention_index = static_cast<int>(doc.mentions.size());
    doc.mentions.push_back(Mention{si, t0, t1, entity, type, ann.surface});
    doc.entities[entity].mention_refs.push_back(mention_index);
  }

  for (const RawRelation& rel : raw.relations) {
    auto cat = std::find(opts.relation_types.begin(), opts.relation_types.end(), rel.type);
    if (cat == opts.relation_types.end()) {
      ++result.relations_unknown_type;
      continue;
    }
    auto h = entity_of.find(rel.id1);
    auto t = entity_of.find(rel.id2);
    if (h == entity_of.end() || t == entity_of.end()) {
      ++result.relations_unknown_entity;
      continue;
    }
    doc.relations.push_back(RelationLabel{
        h->second, t->second,
        static_cast<int>(cat - opts.relation_types.begin()), rel.type});
  }
  return doc;
}

}  // namespace

ParseResult parse_pubtator(const std::string& text, const ParseOptions& opts) {
  ParseResult result;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  RawDoc current;
  bool open = false;

  auto flush = [&]() {
    if (!open) return;
    result.documents.push_back(assemble_document(current, opts, result));
    current = RawDoc{};
    open = false;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    // title/abstract lines: PMID|t|... and PMID|a|...
    std::size_t p1 = line.find('|');
    if (line.find('\t') == std::string::npos && p1 != std::string::npos) {
      std::size_t p2 = line.find('|', p1 + 1);
      if (p2 == std::string::npos || p2 != p1 + 2 ||
          (line[p1 + 1] != 't' && line[p1 + 1] != 'a')) {
        throw DataError("line " + std::to_string(line_no) + ": malformed text line");
      }
      std::string pmid = line.substr(0, p1);
      std::string body = line.substr(p2 + 1);
      if (open && pmid != current.pmid) {
        throw DataError("line " + std::to_string(line_no) +
                        ": document id changed without a blank separator");
      }
      open = true;
      current.pmid = pmid;
      if (line[p1 + 1] == 't') {
        current.title = body;
        current.has_title = true;
      } else {
        current.abstract_text = body;
        current.has_abstract = true;
      }
      continue;
    }
    std::vector<std::string> fields = split_tabs(line);
    if (fields.size() == 4) {
      if (!open || fields[0] != current.pmid) {
        throw DataError("line " + std::to_string(line_no) +
                        ": relation outside its document block");
      }
      current.relations.push_back(RawRelation{fields[1], fields[2], fields[3], line_no});
    } else if (fields.size() >= 6) {
      if (!open || fields[0] != current.pmid) {
        throw DataError("line " + std::to_string(line_no) +
                        ": annotation outside its document block");
      }
      RawAnnotation ann;
      try {
        ann.start = std::stoul(fields[1]);
        ann.end = std::stoul(fields[2]);
      } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_no) +
                        ": annotation offsets are not integers");
      }
      ann.surface = fields[3];
      ann.type = fields[4];
      ann.kb_id = fields[5];
      ann.line_no = line_no;
      current.annotations.push_back(std::move(ann));
    } else {
      throw DataError("line " + std::to_string(line_no) + ": malformed line '" +
                      line + "'");
    }
  }
  flush();
  return result;
}

// --- transforms ---------------------------------------------------------------

Document filter_ungrounded(const Document& doc) {
  Document out;
  out.doc_id = doc.doc_id;
  out.sentences = doc.sentences;

  std::vector<int> entity_map(doc.entities.size(), -1);
  for (std::size_t e = 0; e < doc.entities.size(); ++e) {
    if (doc.entities[e].kb_id == "-1") continue;
    entity_map[e] = static_cast<int>(out.entities.size());
    Entity kept = doc.entities[e];
    kept.mention_refs.clear();
    out.entities.push_back(std::move(kept));
  }
  for (const Mention& m : doc.mentions) {
    int e = entity_map[m.entity_ref];
    if (e < 0) continue;
    Mention kept = m;
    kept.entity_ref = e;
    out.entities[e].mention_refs.push_back(static_cast<int>(out.mentions.size()));
    out.mentions.push_back(std::move(kept));
  }
  // entities can only lose mentions via the "-1" pseudo-entity, so every kept
  // entity still has all of its mentions
  for (const RelationLabel& r : doc.relations) {
    int h = entity_map[r.head_entity];
    int t = entity_map[r.tail_entity];
    if (h < 0 || t < 0) continue;
    out.relations.push_back(RelationLabel{h, t, r.category, r.rel_type});
  }
  return out;
}

std::vector<LabeledPair> generate_pairs(const Document& doc, SemanticType head_type,
                                        SemanticType tail_type, int no_relation_class) {
  std::vector<LabeledPair> pairs;
  for (std::size_t h = 0; h < doc.entities.size(); ++h) {
    if (doc.entities[h].type != head_type) continue;
    for (std::size_t t = 0; t < doc.entities.size(); ++t) {
      if (t == h || doc.entities[t].type != tail_type) continue;
      int category = no_relation_class;
      for (const RelationLabel& r : doc.relations) {
        if (r.head_entity == static_cast<int>(h) &&
            r.tail_entity == static_cast<int>(t)) {
          category = r.category;
          break;
        }
      }
      pairs.push_back(LabeledPair{static_cast<int>(h), static_cast<int>(t), category});
    }
  }
  return pairs;
}

std::vector<Document> merge_train_dev(const std::vector<Document>& train,
                                      const std::vector<Document>& dev) {
  std::vector<Document> out;
  out.reserve(train.size() + dev.size());
  std::set<std::string> ids;
  for (const auto* split : {&train, &dev}) {
    for (const Document& d : *split) {
      if (!ids.insert(d.doc_id).second) {
        throw DataError("merge_train_dev: duplicate document id " + d.doc_id);
      }
      out.push_back(d);
    }
  }
  return out;
}

std::vector<Document> split_into_sentence_documents(const Document& doc) {
  std::vector<Document> out;
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    std::vector<int> mention_map(doc.mentions.size(), -1);
    std::vector<int> entity_map(doc.entities.size(), -1);
    Document sub;
    sub.doc_id = doc.doc_id;
    Sentence sent = doc.sentences[s];
    sent.index = 0;
    sub.sentences.push_back(std::move(sent));
    for (std::size_t m = 0; m < doc.mentions.size(); ++m) {
      if (doc.mentions[m].sentence_index != static_cast<int>(s)) continue;
      const Mention& men = doc.mentions[m];
      int e = entity_map[men.entity_ref];
      if (e < 0) {
        e = static_cast<int>(sub.entities.size());
        entity_map[men.entity_ref] = e;
        const Entity& src = doc.entities[men.entity_ref];
        sub.entities.push_back(Entity{src.kb_id, src.type, {}});
      }
      mention_map[m] = static_cast<int>(sub.mentions.size());
      Mention kept = men;
      kept.sentence_index = 0;
      kept.entity_ref = e;
      sub.entities[e].mention_refs.push_back(mention_map[m]);
      sub.mentions.push_back(std::move(kept));
    }
    if (sub.mentions.empty()) continue;
    for (const RelationLabel& r : doc.relations) {
      int h = entity_map[r.head_entity];
      int t = entity_map[r.tail_entity];
      if (h < 0 || t < 0) continue;
      sub.relations.push_back(RelationLabel{h, t, r.category, r.rel_type});
    }
    out.push_back(std::move(sub));
  }
  return out;
}

// --- vocabulary ----------------------------------------------------------------

std::string lowercase(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

int Vocabulary::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  int idx = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, idx);
  return idx;
}

int Vocabulary::lookup(const std::string& raw) const {
  auto it = index_.find(lowercase(raw));
  return it == index_.end() ? unk() : it->second;
}

bool Vocabulary::contains(const std::string& normalized) const {
  return index_.count(normalized) != 0;
}

Vocabulary Vocabulary::build(std::span<const Document> docs) {
  Vocabulary v;
  v.add(kPadToken);
  v.add(kUnkToken);
  for (const Document& doc : docs) {
    for (const Sentence& s : doc.sentences) {
      for (const std::string& t : s.tokens) v.add(lowercase(t));
    }
  }
  return v;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocabulary to " + path);
  for (const std::string& t : tokens_) out << t << "\n";
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read vocabulary from " + path);
  Vocabulary v;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) v.add(line);
  }
  return v;
}

EmbeddingLoad load_embeddings(const std::string& path, const Vocabulary& vocab,
                              std::size_t dim, SplitRng& rng) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read embeddings from " + path);

  Tensor table = Tensor::zeros({vocab.size(), dim});
  for (double& v : table.values()) v = rng.uniform(-0.05, 0.05);

  std::vector<bool> filled(vocab.size(), false);
  int matched = 0, file_rows = 0;
  std::string line;
  int line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    std::vector<double> values;
    double x;
    while (ls >> x) values.push_back(x);
    if (first) {
      first = false;
      // optional "count dim" header
      if (values.size() == 1) {
        bool numeric = !token.empty() &&
                       token.find_first_not_of("0123456789") == std::string::npos;
        if (numeric && static_cast<std::size_t>(values[0]) == dim) continue;
      }
    }
    ++file_rows;
    if (values.size() != dim) {
      throw DataError("embeddings line " + std::to_string(line_no) + ": expected " +
                      std::to_string(dim) + " values, found " +
                      std::to_string(values.size()));
    }
    std::string norm = lowercase(token);
    if (!vocab.contains(norm)) continue;
    int idx = vocab.lookup(norm);
    if (filled[idx]) continue;
    filled[idx] = true;
    if (norm != Vocabulary::kPadToken && norm != Vocabulary::kUnkToken) ++matched;
    std::copy(values.begin(), values.end(), table.values().begin() + idx * dim);
  }
  long content = 0;
  for (const std::string& t : vocab.tokens()) {
    if (t != Vocabulary::kPadToken && t != Vocabulary::kUnkToken) ++content;
  }
  EmbeddingLoad out;
  out.table = table;
  out.coverage = content > 0 ? static_cast<double>(matched) / content : 0.0;
  out.file_rows = file_rows;
  return out;
}

// --- serialization ---------------------------------------------------------------

std::string document_to_json(const Document& doc) {
  json j;
  j["doc_id"] = doc.doc_id;
  j["sentences"] = json::array();
  for (const Sentence& s : doc.sentences) {
    j["sentences"].push_back(
        {{"tokens", s.tokens}, {"start", s.char_start}, {"end", s.char_end}});
  }
  j["mentions"] = json::array();
  for (const Mention& m : doc.mentions) {
    j["mentions"].push_back({{"sentence", m.sentence_index},
                             {"start", m.token_start},
                             {"end", m.token_end},
                             {"entity", m.entity_ref},
                             {"type", to_string(m.type)},
                             {"surface", m.surface}});
  }
  j["entities"] = json::array();
  for (const Entity& e : doc.entities) {
    j["entities"].push_back({{"kb_id", e.kb_id},
                             {"type", to_string(e.type)},
                             {"mentions", e.mention_refs}});
  }
  j["relations"] = json::array();
  for (const RelationLabel& r : doc.relations) {
    j["relations"].push_back({{"head", r.head_entity},
                              {"tail", r.tail_entity},
                              {"category", r.category},
                              {"type", r.rel_type}});
  }
  return j.dump();
}

Document document_from_json(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid document record: ") + e.what());
  }
  try {
    Document doc;
    doc.doc_id = j.at("doc_id").get<std::string>();
    int index = 0;
    for (const json& s : j.at("sentences")) {
      Sentence sent;
      sent.index = index++;
      sent.tokens = s.at("tokens").get<std::vector<std::string>>();
      sent.char_start = s.at("start").get<std::size_t>();
      sent.char_end = s.at("end").get<std::size_t>();
      doc.sentences.push_back(std::move(sent));
    }
    for (const json& m : j.at("mentions")) {
      doc.mentions.push_back(Mention{
          m.at("sentence").get<int>(), m.at("start").get<int>(),
          m.at("end").get<int>(), m.at("entity").get<int>(),
          semantic_type_from(m.at("type").get<std::string>()),
          m.at("surface").get<std::string>()});
    }
    for (const json& e : j.at("entities")) {
      doc.entities.push_back(Entity{e.at("kb_id").get<std::string>(),
                                    semantic_type_from(e.at("type").get<std::string>()),
                                    e.at("mentions").get<std::vector<int>>()});
    }
    for (const json& r : j.at("relations")) {
      doc.relations.push_back(RelationLabel{
          r.at("head").get<int>(), r.at("tail").get<int>(),
          r.at("category").get<int>(), r.value("type", std::string{})});
    }
    validate_document(doc);
    return doc;
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid document record: ") + e.what());
  }
}

void write_documents(const std::string& path, std::span<const Document> docs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write documents to " + path);
  for (const Document& d : docs) out << document_to_json(d) << "\n";
}

std::vector<Document> read_documents(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read documents from " + path);
  std::vector<Document> docs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    docs.push_back(document_from_json(line));
  }
  return docs;
}

}  // namespace eog
