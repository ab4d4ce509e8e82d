#include "ragcert/corpus.hpp"

#include <utility>

#include <json.hpp>

#include "ragcert/error.hpp"
#include "ragcert/io.hpp"
#include "ragcert/log.hpp"
#include "ragcert/text.hpp"

namespace ragcert {

using nlohmann::json;

std::vector<Chunk> chunk_document(const Document& doc, int chunk_size) {
  if (chunk_size < 1)
    raise(Errc::usage_error, "chunk_size must be >= 1, got " + std::to_string(chunk_size));
  auto tokens = whitespace_tokens(doc.text);
  if (tokens.empty())
    raise(Errc::validation_error, "EmptyDocument: document '" + doc.doc_id + "' has no tokens");

  std::vector<Chunk> chunks;
  const std::size_t size = static_cast<std::size_t>(chunk_size);
  for (std::size_t start = 0, ordinal = 0; start < tokens.size(); start += size, ++ordinal) {
    std::size_t end = std::min(start + size, tokens.size());
    Chunk c;
    c.chunk_id = doc.doc_id + "#" + zero_pad(ordinal, 4);
    c.doc_id = doc.doc_id;
    c.text = join_tokens(tokens, start, end);
    c.token_count = static_cast<int>(end - start);
    chunks.push_back(std::move(c));
  }
  return chunks;
}

ChunkStore ChunkStore::build(std::vector<Chunk> chunks) {
  ChunkStore store;
  store.chunks_ = std::move(chunks);
  store.by_id_.reserve(store.chunks_.size());
  for (std::size_t i = 0; i < store.chunks_.size(); ++i) {
    const Chunk& c = store.chunks_[i];
    if (!store.by_id_.emplace(c.chunk_id, i).second)
      raise(Errc::validation_error, "duplicate chunk_id '" + c.chunk_id + "'");
    store.doc_ids_.insert(c.doc_id);
  }
  return store;
}

const Chunk* ChunkStore::find(const std::string& chunk_id) const {
  auto it = by_id_.find(chunk_id);
  return it == by_id_.end() ? nullptr : &chunks_[it->second];
}

std::vector<Document> load_corpus(const std::string& path) {
  std::vector<Document> docs;
  std::unordered_set<std::string> seen;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    std::string where = path + ":" + std::to_string(line);
    Document d;
    d.doc_id = require_field<std::string>(j, "doc_id", where);
    d.text = require_field<std::string>(j, "text", where);
    if (d.doc_id.empty()) raise(Errc::validation_error, where + ": empty doc_id");
    if (whitespace_tokens(d.text).empty())
      raise(Errc::validation_error, where + ": document '" + d.doc_id + "' has empty text");
    if (!seen.insert(d.doc_id).second)
      raise(Errc::validation_error, where + ": duplicate doc_id '" + d.doc_id + "'");
    docs.push_back(std::move(d));
  });
  if (docs.empty()) log::warn("corpus file " + path + " contains no documents");
  return docs;
}

std::vector<QaRecord> load_qa_dataset(const std::string& path) {
  std::vector<QaRecord> records;
  std::unordered_set<std::string> seen;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    std::string where = path + ":" + std::to_string(line);
    QaRecord r;
    r.qa_id = require_field<std::string>(j, "qa_id", where);
    r.question = require_field<std::string>(j, "question", where);
    r.reference_answer = require_field<std::string>(j, "reference_answer", where);
    r.gold_doc_id = require_field<std::string>(j, "gold_doc_id", where);
    if (r.question.empty() || r.reference_answer.empty())
      raise(Errc::validation_error,
            where + ": question and reference_answer must be non-empty for '" + r.qa_id + "'");
    if (!seen.insert(r.qa_id).second)
      raise(Errc::validation_error, where + ": duplicate qa_id '" + r.qa_id + "'");
    records.push_back(std::move(r));
  });
  if (records.empty()) log::warn("qa file " + path + " contains no records");
  return records;
}

void validate_qa(const std::vector<QaRecord>& records,
                 const std::unordered_set<std::string>& doc_ids) {
  for (const auto& r : records) {
    if (doc_ids.count(r.gold_doc_id) == 0)
      raise(Errc::validation_error,
            "qa record '" + r.qa_id + "' references unknown gold_doc_id '" + r.gold_doc_id + "'");
  }
}

std::vector<Chunk> load_chunks(const std::string& path) {
  std::vector<Chunk> chunks;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    std::string where = path + ":" + std::to_string(line);
    Chunk c;
    c.chunk_id = require_field<std::string>(j, "chunk_id", where);
    c.doc_id = require_field<std::string>(j, "doc_id", where);
    c.text = require_field<std::string>(j, "text", where);
    c.token_count = require_field<int>(j, "token_count", where);
    if (c.token_count < 0) raise(Errc::validation_error, where + ": negative token_count");
    chunks.push_back(std::move(c));
  });
  return chunks;
}

void save_chunks(const std::string& path, const std::vector<Chunk>& chunks) {
  std::vector<json> lines;
  lines.reserve(chunks.size());
  for (const auto& c : chunks) {
    lines.push_back({{"chunk_id", c.chunk_id},
                     {"doc_id", c.doc_id},
                     {"text", c.text},
                     {"token_count", c.token_count}});
  }
  write_jsonl(path, lines);
}

}  // namespace ragcert
