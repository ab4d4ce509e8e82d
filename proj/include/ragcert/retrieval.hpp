#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragcert/corpus.hpp"

namespace ragcert {

struct ScoredChunk {
  std::string chunk_id;
  std::string doc_id;
  double raw_score = 0.0;
  std::optional<double> norm_score;  // set by conformal normalization, clamped to [0,1]
};

// Candidates sorted by raw_score descending, ties by chunk_id ascending.
struct RetrievalResult {
  std::string qa_id;
  std::vector<ScoredChunk> candidates;
};

void sort_candidates(std::vector<ScoredChunk>& candidates);

struct Bm25Params {
  double k1 = 1.5;
  double b = 0.75;
};

// Okapi BM25 over lowercased whitespace tokens.
// IDF(t) = ln(1 + (N - df + 0.5) / (df + 0.5)), always positive.
class InvertedIndex {
 public:
  static InvertedIndex build(const std::vector<Chunk>& chunks);

  double score(const std::string& query, const std::string& chunk_id,
               const Bm25Params& params = {}) const;

  RetrievalResult retrieve_top_k(const std::string& qa_id, const std::string& question, int k,
                                 const Bm25Params& params = {}) const;

  std::size_t corpus_size() const { return chunk_ids_.size(); }
  double avg_chunk_len() const { return avg_len_; }
  std::size_t posting_count(const std::string& term) const;

  nlohmann::json to_json() const;
  static InvertedIndex from_json(const nlohmann::json& j);

 private:
  struct Posting {
    std::uint32_t chunk;
    std::uint32_t tf;
  };

  double idf(std::size_t df) const;
  std::vector<double> score_all(const std::vector<std::string>& terms,
                                const Bm25Params& params) const;

  std::map<std::string, std::vector<Posting>> postings_;
  std::vector<std::string> chunk_ids_;
  std::vector<std::string> doc_ids_;
  std::vector<std::uint32_t> lengths_;
  std::map<std::string, std::uint32_t> chunk_index_;
  double avg_len_ = 0.0;
};

// Line-delimited {"qa_id", "chunk_id", "raw_score"} produced outside
// (e.g. a reranker). Results keep first-appearance order of qa_id; candidates
// are re-sorted per the RetrievalResult invariant. Unknown qa or chunk ids and
// more than k_max candidates per question raise.
std::vector<RetrievalResult> load_external_scores(const std::string& path, int k_max,
                                                  const ChunkStore& store,
                                                  const std::vector<QaRecord>& qa);

void save_scores(const std::string& path, const std::vector<RetrievalResult>& results);

}  // namespace ragcert
