#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "ragcert/corpus.hpp"
#include "ragcert/error.hpp"
#include "ragcert/text.hpp"

using namespace ragcert;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& contents) {
    static int counter = 0;
    path = (std::filesystem::temp_directory_path() /
            ("ragcert_corpus_" + std::to_string(counter++) + ".jsonl"))
               .string();
    std::ofstream out(path);
    out << contents;
  }
  ~TempFile() { std::filesystem::remove(path); }
};

}  // namespace

TEST_CASE("whitespace tokenization") {
  CHECK(whitespace_tokens("a b  c\t d\n").size() == 4);
  CHECK(whitespace_tokens("").empty());
  CHECK(whitespace_tokens("  \t\n ").empty());
  CHECK(whitespace_tokens("one").size() == 1);
  auto t = lowercase_tokens("The Quick FOX");
  REQUIRE(t.size() == 3);
  CHECK(t[0] == "the");
  CHECK(t[1] == "quick");
  CHECK(t[2] == "fox");
}

TEST_CASE("chunk_document splits into fixed-size token windows") {
  Document five{"d1", "t1 t2 t3 t4 t5"};
  auto chunks = chunk_document(five, 2);
  REQUIRE(chunks.size() == 3);
  CHECK(chunks[0].token_count == 2);
  CHECK(chunks[1].token_count == 2);
  CHECK(chunks[2].token_count == 1);
  CHECK(chunks[0].chunk_id == "d1#0000");
  CHECK(chunks[1].chunk_id == "d1#0001");
  CHECK(chunks[2].chunk_id == "d1#0002");
  for (const auto& c : chunks) CHECK(c.doc_id == "d1");

  SUBCASE("exact split") {
    Document six{"d2", "a b c d e f"};
    auto exact = chunk_document(six, 3);
    REQUIRE(exact.size() == 2);
    CHECK(exact[0].text == "a b c");
    CHECK(exact[1].text == "d e f");
  }

  SUBCASE("512-token document at chunk size 512 is one chunk") {
    std::string text;
    for (int i = 0; i < 512; ++i) text += "w" + std::to_string(i) + " ";
    auto one = chunk_document({"d3", text}, 512);
    REQUIRE(one.size() == 1);
    CHECK(one[0].token_count == 512);
  }
}

TEST_CASE("chunking is lossless and deterministic") {
  Document doc{"doc", "alpha beta gamma delta epsilon zeta eta"};
  auto chunks = chunk_document(doc, 3);

  // Token multiset of all chunks equals the document's tokens (order preserved).
  std::vector<std::string> rejoined;
  for (const auto& c : chunks) {
    auto t = whitespace_tokens(c.text);
    CHECK(static_cast<int>(t.size()) == c.token_count);
    rejoined.insert(rejoined.end(), t.begin(), t.end());
  }
  CHECK(rejoined == whitespace_tokens(doc.text));

  auto again = chunk_document(doc, 3);
  REQUIRE(again.size() == chunks.size());
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    CHECK(again[i].chunk_id == chunks[i].chunk_id);
    CHECK(again[i].text == chunks[i].text);
  }
}

TEST_CASE("chunk_document rejects empty documents") {
  CHECK_THROWS_AS(chunk_document({"d", ""}, 2), RagError);
  CHECK_THROWS_AS(chunk_document({"d", "  \n"}, 2), RagError);
  CHECK_THROWS_AS(chunk_document({"d", "x"}, 0), RagError);
}

TEST_CASE("load_qa_dataset") {
  SUBCASE("valid lines load in order") {
    TempFile f(
        R"({"qa_id":"q1","question":"who?","reference_answer":"him","gold_doc_id":"d1"})"
        "\n"
        R"({"qa_id":"q2","question":"what?","reference_answer":"that","gold_doc_id":"d2"})"
        "\n"
        R"({"qa_id":"q3","question":"when?","reference_answer":"now","gold_doc_id":"d1"})"
        "\n");
    auto records = load_qa_dataset(f.path);
    REQUIRE(records.size() == 3);
    CHECK(records[0].qa_id == "q1");
    CHECK(records[2].gold_doc_id == "d1");
  }

  SUBCASE("missing field names the field and line") {
    TempFile f(R"({"qa_id":"q1","question":"who?","reference_answer":"him"})" "\n");
    try {
      load_qa_dataset(f.path);
      FAIL("expected a parse error");
    } catch (const RagError& e) {
      CHECK(e.code() == Errc::format_error);
      CHECK(std::string(e.what()).find("gold_doc_id") != std::string::npos);
      CHECK(std::string(e.what()).find(":1") != std::string::npos);
    }
  }

  SUBCASE("duplicate qa_id raises") {
    TempFile f(
        R"({"qa_id":"q1","question":"a","reference_answer":"b","gold_doc_id":"d"})"
        "\n"
        R"({"qa_id":"q1","question":"c","reference_answer":"d","gold_doc_id":"d"})"
        "\n");
    CHECK_THROWS_AS(load_qa_dataset(f.path), RagError);
  }

  SUBCASE("empty file gives an empty list") {
    TempFile f("");
    CHECK(load_qa_dataset(f.path).empty());
  }

  SUBCASE("missing file is an io error") {
    try {
      load_qa_dataset("/nonexistent/qa.jsonl");
      FAIL("expected io error");
    } catch (const RagError& e) {
      CHECK(e.code() == Errc::io_error);
    }
  }
}

TEST_CASE("corpus loading and qa validation") {
  TempFile corpus(
      R"({"doc_id":"d1","text":"alpha beta"})" "\n"
      R"({"doc_id":"d2","text":"gamma delta"})" "\n");
  auto docs = load_corpus(corpus.path);
  REQUIRE(docs.size() == 2);

  std::unordered_set<std::string> ids{"d1", "d2"};
  validate_qa({{"q1", "q?", "a", "d1"}}, ids);
  CHECK_THROWS_AS(validate_qa({{"q1", "q?", "a", "d9"}}, ids), RagError);

  SUBCASE("duplicate doc_id raises") {
    TempFile dup(
        R"({"doc_id":"d1","text":"x"})" "\n"
        R"({"doc_id":"d1","text":"y"})" "\n");
    CHECK_THROWS_AS(load_corpus(dup.path), RagError);
  }
}

TEST_CASE("chunk store lookup and persistence") {
  auto chunks = chunk_document({"d1", "a b c d"}, 2);
  auto more = chunk_document({"d2", "e f"}, 2);
  chunks.insert(chunks.end(), more.begin(), more.end());

  auto store = ChunkStore::build(chunks);
  REQUIRE(store.find("d1#0001") != nullptr);
  CHECK(store.find("d1#0001")->text == "c d");
  CHECK(store.find("nope") == nullptr);
  CHECK(store.has_doc("d2"));
  CHECK_FALSE(store.has_doc("d3"));

  TempFile f("");
  save_chunks(f.path, chunks);
  auto loaded = load_chunks(f.path);
  REQUIRE(loaded.size() == chunks.size());
  CHECK(loaded[1].chunk_id == chunks[1].chunk_id);
  CHECK(loaded[1].text == chunks[1].text);

  CHECK_THROWS_AS(ChunkStore::build({{"c", "d", "x", 1}, {"c", "d", "y", 1}}), RagError);
}
