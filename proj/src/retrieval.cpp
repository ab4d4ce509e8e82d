#include "ragcert/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "ragcert/error.hpp"
#include "ragcert/io.hpp"
#include "ragcert/text.hpp"

namespace ragcert {

using nlohmann::json;

void sort_candidates(std::vector<ScoredChunk>& candidates) {
  std::sort(candidates.begin(), candidates.end(), [](const ScoredChunk& a, const ScoredChunk& b) {
    if (a.raw_score != b.raw_score) return a.raw_score > b.raw_score;
    return a.chunk_id < b.chunk_id;
  });
}

InvertedIndex InvertedIndex::build(const std::vector<Chunk>& chunks) {
  if (chunks.empty()) raise(Errc::usage_error, "cannot build an index from an empty chunk list");

  InvertedIndex index;
  index.chunk_ids_.reserve(chunks.size());
  index.lengths_.reserve(chunks.size());
  std::size_t total_len = 0;
  for (std::uint32_t i = 0; i < chunks.size(); ++i) {
    const Chunk& c = chunks[i];
    if (!index.chunk_index_.emplace(c.chunk_id, i).second)
      raise(Errc::validation_error, "duplicate chunk_id '" + c.chunk_id + "' in index input");
    auto terms = lowercase_tokens(c.text);
    std::unordered_map<std::string, std::uint32_t> tf;
    for (const auto& t : terms) ++tf[t];
    for (const auto& [term, count] : tf) index.postings_[term].push_back({i, count});
    index.chunk_ids_.push_back(c.chunk_id);
    index.doc_ids_.push_back(c.doc_id);
    index.lengths_.push_back(static_cast<std::uint32_t>(terms.size()));
    total_len += terms.size();
  }
  // std::map iteration gives per-term postings in insertion-by-chunk order already;
  // keep them sorted by chunk for deterministic serialization.
  for (auto& [term, plist] : index.postings_)
    std::sort(plist.begin(), plist.end(),
              [](const Posting& a, const Posting& b) { return a.chunk < b.chunk; });
  index.avg_len_ = static_cast<double>(total_len) / static_cast<double>(chunks.size());
  return index;
}

double InvertedIndex::idf(std::size_t df) const {
  double n = static_cast<double>(chunk_ids_.size());
  return std::log(1.0 + (n - static_cast<double>(df) + 0.5) / (static_cast<double>(df) + 0.5));
}

std::size_t InvertedIndex::posting_count(const std::string& term) const {
  auto it = postings_.find(term);
  return it == postings_.end() ? 0 : it->second.size();
}

std::vector<double> InvertedIndex::score_all(const std::vector<std::string>& terms,
                                             const Bm25Params& params) const {
  std::vector<double> scores(chunk_ids_.size(), 0.0);
  if (avg_len_ == 0.0) return scores;
  for (const auto& term : terms) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;  // out-of-vocabulary terms contribute zero
    double w = idf(it->second.size());
    for (const Posting& p : it->second) {
      double tf = static_cast<double>(p.tf);
      double len_norm = 1.0 - params.b + params.b * lengths_[p.chunk] / avg_len_;
      scores[p.chunk] += w * tf * (params.k1 + 1.0) / (tf + params.k1 * len_norm);
    }
  }
  return scores;
}

double InvertedIndex::score(const std::string& query, const std::string& chunk_id,
                            const Bm25Params& params) const {
  auto it = chunk_index_.find(chunk_id);
  if (it == chunk_index_.end())
    raise(Errc::validation_error, "chunk_id '" + chunk_id + "' is not indexed");
  return score_all(lowercase_tokens(query), params)[it->second];
}

RetrievalResult InvertedIndex::retrieve_top_k(const std::string& qa_id,
                                              const std::string& question, int k,
                                              const Bm25Params& params) const {
  if (k < 1) raise(Errc::usage_error, "retrieval depth K must be >= 1");
  auto scores = score_all(lowercase_tokens(question), params);

  RetrievalResult result;
  result.qa_id = qa_id;
  result.candidates.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    result.candidates.push_back({chunk_ids_[i], doc_ids_[i], scores[i], std::nullopt});
  sort_candidates(result.candidates);
  if (result.candidates.size() > static_cast<std::size_t>(k)) result.candidates.resize(k);
  return result;
}

json InvertedIndex::to_json() const {
  json postings = json::object();
  for (const auto& [term, plist] : postings_) {
    json entries = json::array();
    for (const Posting& p : plist) entries.push_back({p.chunk, p.tf});
    postings[term] = std::move(entries);
  }
  return {{"chunk_ids", chunk_ids_},
          {"doc_ids", doc_ids_},
          {"lengths", lengths_},
          {"avg_len", avg_len_},
          {"postings", postings}};
}

InvertedIndex InvertedIndex::from_json(const json& j) {
  InvertedIndex index;
  index.chunk_ids_ = require_field<std::vector<std::string>>(j, "chunk_ids", "index");
  index.doc_ids_ = require_field<std::vector<std::string>>(j, "doc_ids", "index");
  index.lengths_ = require_field<std::vector<std::uint32_t>>(j, "lengths", "index");
  index.avg_len_ = require_field<double>(j, "avg_len", "index");
  if (index.chunk_ids_.size() != index.doc_ids_.size() ||
      index.chunk_ids_.size() != index.lengths_.size())
    raise(Errc::format_error, "index: chunk_ids/doc_ids/lengths size mismatch");
  json postings = require_field<json>(j, "postings", "index");
  for (auto it = postings.begin(); it != postings.end(); ++it) {
    std::vector<Posting>& plist = index.postings_[it.key()];
    for (const auto& e : it.value()) plist.push_back({e.at(0).get<std::uint32_t>(), e.at(1).get<std::uint32_t>()});
  }
  for (std::uint32_t i = 0; i < index.chunk_ids_.size(); ++i)
    index.chunk_index_.emplace(index.chunk_ids_[i], i);
  return index;
}

std::vector<RetrievalResult> load_external_scores(const std::string& path, int k_max,
                                                  const ChunkStore& store,
                                                  const std::vector<QaRecord>& qa) {
  std::unordered_map<std::string, std::size_t> qa_index;
  for (std::size_t i = 0; i < qa.size(); ++i) qa_index.emplace(qa[i].qa_id, i);

  std::vector<RetrievalResult> results;
  std::unordered_map<std::string, std::size_t> result_index;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    std::string where = path + ":" + std::to_string(line);
    std::string qa_id = require_field<std::string>(j, "qa_id", where);
    std::string chunk_id = require_field<std::string>(j, "chunk_id", where);
    double raw = require_field<double>(j, "raw_score", where);

    if (qa_index.find(qa_id) == qa_index.end())
      raise(Errc::validation_error, where + ": score references unknown qa_id '" + qa_id + "'");
    const Chunk* chunk = store.find(chunk_id);
    if (chunk == nullptr)
      raise(Errc::validation_error,
            where + ": score references unknown chunk_id '" + chunk_id + "'");

    auto [it, inserted] = result_index.emplace(qa_id, results.size());
    if (inserted) results.push_back({qa_id, {}});
    auto& candidates = results[it->second].candidates;
    if (candidates.size() >= static_cast<std::size_t>(k_max))
      raise(Errc::validation_error,
            where + ": more than K=" + std::to_string(k_max) + " candidates for '" + qa_id + "'");
    candidates.push_back({chunk_id, chunk->doc_id, raw, std::nullopt});
  });
  for (auto& r : results) sort_candidates(r.candidates);
  return results;
}

void save_scores(const std::string& path, const std::vector<RetrievalResult>& results) {
  std::vector<json> lines;
  for (const auto& r : results)
    for (const auto& c : r.candidates)
      lines.push_back({{"qa_id", r.qa_id}, {"chunk_id", c.chunk_id}, {"raw_score", c.raw_score}});
  write_jsonl(path, lines);
}

}  // namespace ragcert
