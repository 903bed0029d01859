#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "eog/corpus.hpp"
#include "eog/errors.hpp"
#include "eog/rng.hpp"

using namespace eog;

namespace {

// title spans [0,26), abstract starts at 27; "Hypertension" sits at [61,73)
const char* kFixture =
    "10000|t|Naloxone reverses effects.\n"
    "10000|a|The drug blocks opioid receptors. Hypertension was observed.\n"
    "10000\t0\t8\tNaloxone\tChemical\tD009270\n"
    "10000\t61\t73\tHypertension\tDisease\tD006973\n"
    "10000\tCID\tD009270\tD006973\n";

}  // namespace

TEST_CASE("parse_pubtator of an empty string yields no documents") {
  CHECK(parse_pubtator("").documents.empty());
}

TEST_CASE("parse_pubtator builds the hand-constructed fixture document") {
  ParseResult result = parse_pubtator(kFixture);
  REQUIRE(result.documents.size() == 1);
  const Document& doc = result.documents[0];
  CHECK(doc.doc_id == "10000");
  REQUIRE(doc.sentences.size() == 3);
  CHECK(doc.sentences[0].tokens ==
        std::vector<std::string>{"Naloxone", "reverses", "effects", "."});
  CHECK(doc.sentences[2].tokens ==
        std::vector<std::string>{"Hypertension", "was", "observed", "."});

  REQUIRE(doc.mentions.size() == 2);
  CHECK(doc.mentions[0].sentence_index == 0);
  CHECK(doc.mentions[0].token_start == 0);
  CHECK(doc.mentions[0].token_end == 1);
  CHECK(doc.mentions[0].type == SemanticType::Chemical);
  CHECK(doc.mentions[1].sentence_index == 2);
  CHECK(doc.mentions[1].token_start == 0);
  CHECK(doc.mentions[1].token_end == 1);

  REQUIRE(doc.entities.size() == 2);
  CHECK(doc.entities[0].kb_id == "D009270");
  CHECK(doc.entities[1].kb_id == "D006973");

  REQUIRE(doc.relations.size() == 1);
  CHECK(doc.relations[0].head_entity == 0);
  CHECK(doc.relations[0].tail_entity == 1);
  CHECK(doc.relations[0].category == 0);
  validate_document(doc);
}

TEST_CASE("offsets that cut a token expand to the covering token span") {
  // [0,3) covers only part of "Naloxone"
  std::string text =
      "1|t|Naloxone helps.\n"
      "1\t0\t3\tNal\tChemical\tD1\n";
  Document doc = parse_pubtator(text).documents[0];
  REQUIRE(doc.mentions.size() == 1);
  CHECK(doc.mentions[0].token_start == 0);
  CHECK(doc.mentions[0].token_end == 1);
}

TEST_CASE("cross-sentence annotations clip to the sentence holding the start") {
  // "effects. The" spans the sentence split at [18,31)
  std::string text =
      "1|t|Naloxone reverses effects.\n"
      "1|a|The drug works.\n"
      "1\t18\t31\teffects. The\tChemical\tD1\n";
  Document doc = parse_pubtator(text).documents[0];
  REQUIRE(doc.mentions.size() == 1);
  CHECK(doc.mentions[0].sentence_index == 0);
  CHECK(doc.mentions[0].token_start == 2);
  CHECK(doc.mentions[0].token_end == 4);  // "effects", "."
}

TEST_CASE("relations with unknown KB ids are dropped and counted") {
  std::string text =
      "1|t|Naloxone helps.\n"
      "1\t0\t8\tNaloxone\tChemical\tD1\n"
      "1\tCID\tD1\tD999\n";
  ParseResult result = parse_pubtator(text);
  CHECK(result.documents[0].relations.empty());
  CHECK(result.relations_unknown_entity == 1);
}

TEST_CASE("relation types outside the configured list are dropped and counted") {
  std::string text =
      "1|t|Naloxone causes pain.\n"
      "1\t0\t8\tNaloxone\tChemical\tD1\n"
      "1\t16\t20\tpain\tDisease\tD2\n"
      "1\tGDA\tD1\tD2\n";
  ParseResult result = parse_pubtator(text);
  CHECK(result.documents[0].relations.empty());
  CHECK(result.relations_unknown_type == 1);

  ParseOptions opts;
  opts.relation_types = {"GDA"};
  ParseResult gda = parse_pubtator(text, opts);
  CHECK(gda.documents[0].relations.size() == 1);
}

TEST_CASE("malformed lines fail with their line number") {
  std::string text =
      "1|t|Naloxone helps.\n"
      "1\tnot_an_int\t8\tNaloxone\tChemical\tD1\textra\n";
  try {
    parse_pubtator(text);
    FAIL("expected a data error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("two documents separated by a blank line") {
  std::string text = std::string(kFixture) + "\n" +
                     "10001|t|Aspirin works.\n"
                     "10001\t0\t7\tAspirin\tChemical\tD0\n";
  ParseResult result = parse_pubtator(text);
  REQUIRE(result.documents.size() == 2);
  CHECK(result.documents[1].doc_id == "10001");
}

TEST_CASE("fallback tokenizer splits on terminator + space + capital") {
  CHECK(fallback_tokenize("A b. C d.").size() == 2);
  CHECK(fallback_tokenize("Mr. X").size() == 2);  // heuristic miss, by the rule
  CHECK(fallback_tokenize("a b. c d.").size() == 1);
  CHECK(fallback_tokenize("Values of 2.5 exist.").size() == 1);
}

TEST_CASE("fallback tokenizer detaches punctuation") {
  std::vector<Sentence> s = fallback_tokenize("(aspirin), given twice");
  REQUIRE(s.size() == 1);
  CHECK(s[0].tokens ==
        std::vector<std::string>{"(", "aspirin", ")", ",", "given", "twice"});
  // hyphens stay inside tokens
  CHECK(fallback_tokenize("10-year-old")[0].tokens ==
        std::vector<std::string>{"10-year-old"});
}

TEST_CASE("sentence char spans are ordered and non-overlapping") {
  TokenizedText tok = fallback_tokenize_spans("One two. Three four. Five.");
  REQUIRE(tok.sentences.size() == 3);
  for (std::size_t i = 1; i < tok.sentences.size(); ++i) {
    CHECK(tok.sentences[i].char_start >= tok.sentences[i - 1].char_end);
  }
}

TEST_CASE("filter_ungrounded removes -1 mentions, empty entities and relations") {
  std::string text =
      "1|t|Naloxone blocks pain and more pain.\n"
      "1\t0\t8\tNaloxone\tChemical\tD1\n"
      "1\t16\t20\tpain\tDisease\t-1\n"
      "1\t30\t34\tpain\tDisease\tD2\n"
      "1\tCID\tD1\tD2\n"
      "1\tCID\tD1\t-1\n";
  Document doc = parse_pubtator(text).documents[0];
  CHECK(doc.mentions.size() == 3);
  CHECK(doc.relations.size() == 2);

  Document filtered = filter_ungrounded(doc);
  CHECK(filtered.mentions.size() == 2);
  CHECK(filtered.entities.size() == 2);
  CHECK(filtered.relations.size() == 1);
  validate_document(filtered);

  SUBCASE("idempotent") { CHECK(filter_ungrounded(filtered) == filtered); }
}

TEST_CASE("entity whose only mention is ungrounded disappears with its relations") {
  std::string text =
      "1|t|Naloxone blocks pain.\n"
      "1\t0\t8\tNaloxone\tChemical\tD1\n"
      "1\t16\t20\tpain\tDisease\t-1\n"
      "1\tCID\tD1\t-1\n";
  Document filtered = filter_ungrounded(parse_pubtator(text).documents[0]);
  CHECK(filtered.entities.size() == 1);
  CHECK(filtered.relations.empty());
}

TEST_CASE("generate_pairs enumerates ordered typed pairs with labels") {
  Document doc;
  doc.doc_id = "d";
  doc.sentences = {Sentence{0, {"x"}, 0, 1}};
  auto add_entity = [&](const std::string& id, SemanticType t) {
    int m = static_cast<int>(doc.mentions.size());
    int e = static_cast<int>(doc.entities.size());
    doc.mentions.push_back(Mention{0, 0, 1, e, t, "x"});
    doc.entities.push_back(Entity{id, t, {m}});
  };

  SUBCASE("one chemical, one disease, no relation -> one negative pair") {
    add_entity("C1", SemanticType::Chemical);
    add_entity("D1", SemanticType::Disease);
    auto pairs = generate_pairs(doc, SemanticType::Chemical, SemanticType::Disease, 1);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].category == 1);
  }

  SUBCASE("2 chemicals x 2 diseases with one CID -> 1 positive, 3 negative") {
    add_entity("C1", SemanticType::Chemical);
    add_entity("C2", SemanticType::Chemical);
    add_entity("D1", SemanticType::Disease);
    add_entity("D2", SemanticType::Disease);
    doc.relations.push_back(RelationLabel{0, 2, 0, "CID"});
    auto pairs = generate_pairs(doc, SemanticType::Chemical, SemanticType::Disease, 1);
    REQUIRE(pairs.size() == 4);
    int positives = 0;
    for (const LabeledPair& p : pairs) positives += p.category == 0 ? 1 : 0;
    CHECK(positives == 1);
    CHECK(pairs[0].head_entity == 0);
    CHECK(pairs[0].tail_entity == 2);
    CHECK(pairs[0].category == 0);
  }

  SUBCASE("pair count is |heads| * |tails|") {
    for (int c = 0; c < 3; ++c)
      add_entity("C" + std::to_string(c), SemanticType::Chemical);
    for (int d = 0; d < 4; ++d)
      add_entity("D" + std::to_string(d), SemanticType::Disease);
    auto pairs = generate_pairs(doc, SemanticType::Chemical, SemanticType::Disease, 1);
    CHECK(pairs.size() == 12);
  }
}

TEST_CASE("merge_train_dev concatenates and rejects duplicate ids") {
  Document a, b;
  a.doc_id = "1";
  b.doc_id = "2";
  CHECK(merge_train_dev({a}, {b}).size() == 2);
  CHECK(merge_train_dev({a, b}, {}).size() == 2);
  CHECK_THROWS_AS(merge_train_dev({a}, {a}), DataError);
}

TEST_CASE("documents round-trip through the line serialization") {
  for (const Document& doc : parse_pubtator(kFixture).documents) {
    Document back = document_from_json(document_to_json(doc));
    CHECK(back == doc);
  }
}

TEST_CASE("vocabulary lowercases lookups and maps misses to unk") {
  std::vector<Document> docs = parse_pubtator(kFixture).documents;
  Vocabulary vocab = Vocabulary::build(docs);
  CHECK(vocab.lookup("naloxone") == vocab.lookup("Naloxone"));
  CHECK(vocab.lookup("NALOXONE") != vocab.unk());
  CHECK(vocab.lookup("absent-token") == vocab.unk());
  CHECK(vocab.tokens()[0] == Vocabulary::kPadToken);
  CHECK(vocab.tokens()[1] == Vocabulary::kUnkToken);
}

TEST_CASE("vocabulary save/load round-trips") {
  std::vector<Document> docs = parse_pubtator(kFixture).documents;
  Vocabulary vocab = Vocabulary::build(docs);
  const std::string path = "/tmp/eog_vocab_test.txt";
  vocab.save(path);
  CHECK(Vocabulary::load(path) == vocab);
}

TEST_CASE("load_embeddings copies matching rows and reports coverage") {
  SplitRng rng(1);
  const std::string path = "/tmp/eog_emb_test.txt";

  SUBCASE("empty vocabulary -> empty table, coverage 0") {
    std::ofstream(path) << "a 1 2 3 4\n";
    Vocabulary vocab;
    EmbeddingLoad load = load_embeddings(path, vocab, 4, rng);
    CHECK(load.table.size() == 0);
    CHECK(load.coverage == 0.0);
  }

  SUBCASE("half the vocabulary present -> coverage 0.5") {
    std::ofstream(path) << "alpha 1 2 3 4\n";
    Vocabulary vocab;
    vocab.add(Vocabulary::kPadToken);
    vocab.add(Vocabulary::kUnkToken);
    vocab.add("alpha");
    vocab.add("beta");
    EmbeddingLoad load = load_embeddings(path, vocab, 4, rng);
    CHECK(load.coverage == doctest::Approx(0.5));
    CHECK(load.table.values()[2 * 4 + 0] == 1.0);
    CHECK(load.table.values()[2 * 4 + 3] == 4.0);
  }

  SUBCASE("matched rows equal the file rows exactly, header tolerated") {
    std::ofstream(path) << "3 4\nape 1 2 3 4\nbat -1 0 1 2\ncat 9 8 7 6\n";
    Vocabulary vocab;
    vocab.add(Vocabulary::kPadToken);
    vocab.add(Vocabulary::kUnkToken);
    vocab.add("ape");
    vocab.add("bat");
    vocab.add("cat");
    EmbeddingLoad load = load_embeddings(path, vocab, 4, rng);
    CHECK(load.file_rows == 3);
    CHECK(load.coverage == doctest::Approx(1.0));
    std::vector<double> expected = {1, 2, 3, 4, -1, 0, 1, 2, 9, 8, 7, 6};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) {
        CHECK(load.table.values()[(2 + r) * 4 + c] == expected[r * 4 + c]);
      }
    }
  }

  SUBCASE("dimension mismatch names the offending line") {
    std::ofstream(path) << "ape 1 2 3 4\nbat 1 2\n";
    Vocabulary vocab;
    vocab.add("ape");
    try {
      load_embeddings(path, vocab, 4, rng);
      FAIL("expected a data error");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
}

TEST_CASE("split_into_sentence_documents keeps per-sentence annotations") {
  Document doc = parse_pubtator(kFixture).documents[0];
  std::vector<Document> subs = split_into_sentence_documents(doc);
  REQUIRE(subs.size() == 2);  // the middle sentence has no mentions
  CHECK(subs[0].sentences.size() == 1);
  CHECK(subs[0].mentions.size() == 1);
  CHECK(subs[0].entities.size() == 1);
  CHECK(subs[0].relations.empty());  // relation needs both entities
  for (const Document& sub : subs) validate_document(sub);
}

TEST_CASE("same-sentence relation survives the sentence split") {
  std::string text =
      "1|t|Naloxone causes pain.\n"
      "1\t0\t8\tNaloxone\tChemical\tD1\n"
      "1\t16\t20\tpain\tDisease\tD2\n"
      "1\tCID\tD1\tD2\n";
  Document doc = parse_pubtator(text).documents[0];
  std::vector<Document> subs = split_into_sentence_documents(doc);
  REQUIRE(subs.size() == 1);
  CHECK(subs[0].relations.size() == 1);
}
