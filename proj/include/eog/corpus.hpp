#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "eog/autodiff.hpp"

namespace eog {

class SplitRng;

enum class SemanticType { Chemical, Disease, Gene };

const char* to_string(SemanticType t);
SemanticType semantic_type_from(const std::string& s);

struct Sentence {
  int index = 0;
  std::vector<std::string> tokens;
  std::size_t char_start = 0;  // offsets into title + " " + abstract
  std::size_t char_end = 0;
  bool operator==(const Sentence&) const = default;
};

struct Mention {
  int sentence_index = 0;
  int token_start = 0;  // end exclusive
  int token_end = 0;
  int entity_ref = 0;
  SemanticType type = SemanticType::Chemical;
  std::string surface;
  bool operator==(const Mention&) const = default;
};

struct Entity {
  std::string kb_id;
  SemanticType type = SemanticType::Chemical;
  std::vector<int> mention_refs;
  bool operator==(const Entity&) const = default;
};

struct RelationLabel {
  int head_entity = 0;
  int tail_entity = 0;
  int category = 0;  // index into the positive classes
  std::string rel_type;
  bool operator==(const RelationLabel&) const = default;
};

struct Document {
  std::string doc_id;
  std::vector<Sentence> sentences;
  std::vector<Mention> mentions;
  std::vector<Entity> entities;
  std::vector<RelationLabel> relations;
  bool operator==(const Document&) const = default;
};

// Checks the document invariants (spans in bounds, entity/mention linkage,
// unique KB ids). Throws DataError naming the violation.
void validate_document(const Document& doc);

// --- tokenization -----------------------------------------------------------

struct TokenizedText {
  std::vector<Sentence> sentences;
  // char span of every token, document coordinates, parallel to tokens
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> token_spans;
};

// Naive sentence splitter + tokenizer used when no pre-tokenized input is
// available: sentences end at . ! ? followed by whitespace and an uppercase
// letter or digit; tokens split on whitespace with leading/trailing
// punctuation detached.
TokenizedText fallback_tokenize_spans(const std::string& raw);
std::vector<Sentence> fallback_tokenize(const std::string& raw);

// --- PubTator ---------------------------------------------------------------

struct ParseOptions {
  // Relation-line type strings that count as positive classes, in category
  // order. Anything else is dropped with a warning count.
  std::vector<std::string> relation_types = {"CID"};
};

struct ParseResult {
  std::vector<Document> documents;
  int relations_unknown_entity = 0;
  int relations_unknown_type = 0;
};

ParseResult parse_pubtator(const std::string& text, const ParseOptions& opts = {});

// --- document-level transforms ----------------------------------------------

// Removes mentions whose KB id is "-1", entities left without mentions, and
// relations referencing removed entities. Idempotent.
Document filter_ungrounded(const Document& doc);

struct LabeledPair {
  int head_entity = 0;
  int tail_entity = 0;
  int category = 0;
};

// Every ordered (head_type, tail_type) entity pair in document order; the
// category comes from a matching relation, else no_relation_class.
std::vector<LabeledPair> generate_pairs(const Document& doc, SemanticType head_type,
                                        SemanticType tail_type, int no_relation_class);

std::vector<Document> merge_train_dev(const std::vector<Document>& train,
                                      const std::vector<Document>& dev);

// One single-sentence document per sentence that carries at least one
// mention; used by the sentence-level model variant.
std::vector<Document> split_into_sentence_documents(const Document& doc);

// --- vocabulary & embeddings -------------------------------------------------

class Vocabulary {
 public:
  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kUnkToken = "<unk>";

  Vocabulary() = default;

  int pad() const { return 0; }
  int unk() const { return 1; }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Adds an already-normalized token, returning its index.
  int add(const std::string& token);
  // Lowercased lookup; unknown tokens map to unk().
  int lookup(const std::string& raw) const;
  bool contains(const std::string& normalized) const;

  static Vocabulary build(std::span<const Document> docs);

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

std::string lowercase(const std::string& s);

struct EmbeddingLoad {
  Tensor table;     // [vocab.size(), dim]
  double coverage;  // matched fraction of non-special vocabulary tokens
  int file_rows;
};

// Text embedding file: optional "count dim" header, then one token followed
// by dim reals per line. Unmatched vocabulary rows are initialized uniform
// in [-0.05, 0.05] from rng.
EmbeddingLoad load_embeddings(const std::string& path, const Vocabulary& vocab,
                              std::size_t dim, SplitRng& rng);

// --- line-delimited document serialization -----------------------------------

std::string document_to_json(const Document& doc);
Document document_from_json(const std::string& line);
void write_documents(const std::string& path, std::span<const Document> docs);
std::vector<Document> read_documents(const std::string& path);

}  // namespace eog
