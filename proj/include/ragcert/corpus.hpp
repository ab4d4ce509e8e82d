#pragma once

#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace ragcert {

struct Document {
  std::string doc_id;
  std::string text;
};

struct Chunk {
  std::string chunk_id;
  std::string doc_id;  // source affiliation
  std::string text;
  int token_count = 0;
};

// One calibration/test unit: question, reference answer, gold source document.
struct QaRecord {
  std::string qa_id;
  std::string question;
  std::string reference_answer;
  std::string gold_doc_id;
};

// Fixed-size whitespace-token windows, no overlap. Every chunk except
// possibly the last has exactly chunk_size tokens; ids are
// "<doc_id>#<zero-padded ordinal>" so re-chunking is byte-identical.
std::vector<Chunk> chunk_document(const Document& doc, int chunk_size);

// Write-once chunk collection with id lookup.
class ChunkStore {
 public:
  static ChunkStore build(std::vector<Chunk> chunks);

  const std::vector<Chunk>& chunks() const { return chunks_; }
  const Chunk* find(const std::string& chunk_id) const;
  bool has_doc(const std::string& doc_id) const { return doc_ids_.count(doc_id) > 0; }

 private:
  std::vector<Chunk> chunks_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_set<std::string> doc_ids_;
};

// Line-delimited {"doc_id", "text"} records.
std::vector<Document> load_corpus(const std::string& path);

// Line-delimited {"qa_id", "question", "reference_answer", "gold_doc_id"}.
// Malformed lines raise with the line number; duplicate qa_id raises.
std::vector<QaRecord> load_qa_dataset(const std::string& path);

// Checks each gold_doc_id against the known documents.
void validate_qa(const std::vector<QaRecord>& records,
                 const std::unordered_set<std::string>& doc_ids);

std::vector<Chunk> load_chunks(const std::string& path);
void save_chunks(const std::string& path, const std::vector<Chunk>& chunks);

}  // namespace ragcert
