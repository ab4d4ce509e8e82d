#include "ragcert/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "ragcert/error.hpp"
#include "ragcert/io.hpp"
#include "ragcert/log.hpp"

namespace ragcert {

using nlohmann::json;

namespace {

// ceil with a nudge so values that are integers up to float noise
// (e.g. 100 * 0.9 = 90.00000000000001) land on the integer.
double ceil_exact(double x) { return std::ceil(x - 1e-9); }

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

}  // namespace

double percentile_higher(std::vector<double> values, double p) {
  if (values.empty()) raise(Errc::usage_error, "percentile of an empty set");
  std::sort(values.begin(), values.end());
  auto m = static_cast<double>(values.size());
  long rank = static_cast<long>(ceil_exact(p * m));
  rank = std::max(1L, std::min(static_cast<long>(values.size()), rank));
  return values[static_cast<std::size_t>(rank - 1)];
}

double adjusted_level(std::size_t n, double alpha, DeltaFormula formula) {
  if (n == 0) raise(Errc::usage_error, "adjusted level needs n >= 1");
  double dn = static_cast<double>(n);
  if (formula == DeltaFormula::literal)
    return std::min(1.0, ceil_exact((dn + 1.0) * (1.0 - alpha) / dn));
  return std::min(1.0, ceil_exact((dn + 1.0) * (1.0 - alpha)) / dn);
}

CalibrationScores build_calibration_scores(const std::vector<RetrievalResult>& results,
                                           const ChunkStore& store,
                                           const std::vector<QaRecord>& qa, RougeStat stat) {
  std::unordered_map<std::string, const QaRecord*> qa_by_id;
  for (const auto& r : qa) qa_by_id.emplace(r.qa_id, &r);

  CalibrationScores scores;
  for (const auto& result : results) {
    auto it = qa_by_id.find(result.qa_id);
    if (it == qa_by_id.end())
      raise(Errc::validation_error, "retrieval result for unknown qa_id '" + result.qa_id + "'");
    const QaRecord& record = *it->second;
    int rank = 0;
    for (const auto& cand : result.candidates) {
      const Chunk* chunk = store.find(cand.chunk_id);
      if (chunk == nullptr)
        raise(Errc::validation_error, "candidate references unknown chunk_id '" + cand.chunk_id + "'");
      CalibrationEntry entry;
      entry.qa_id = result.qa_id;
      entry.rank = ++rank;
      entry.raw_score = cand.raw_score;
      entry.h_score = rouge_l(chunk->text, record.reference_answer).stat(stat);
      entry.affiliation_correct = chunk->doc_id == record.gold_doc_id;
      scores.entries.push_back(std::move(entry));
    }
    ++scores.n_cal;
  }
  return scores;
}

std::pair<double, double> normalize_scores(CalibrationScores& scores) {
  if (scores.entries.empty()) raise(Errc::usage_error, "no calibration entries to normalize");
  double n1 = scores.entries.front().raw_score;
  double n2 = n1;
  for (const auto& e : scores.entries) {
    n1 = std::min(n1, e.raw_score);
    n2 = std::max(n2, e.raw_score);
  }
  if (n2 <= n1)
    raise(Errc::degenerate_input,
          "DegenerateScores: all raw calibration scores are equal (" + std::to_string(n1) + ")");
  for (auto& e : scores.entries) e.norm_score = (e.raw_score - n1) / (n2 - n1);
  return {n1, n2};
}

void normalize_with(CalibrationScores& scores, const ConformalModel& model) {
  for (auto& e : scores.entries)
    e.norm_score = clamp01((e.raw_score - model.n1) / (model.n2 - model.n1));
}

double compute_s_thres(const CalibrationScores& scores, double beta) {
  if (beta < 0.0 || beta > 1.0) raise(Errc::usage_error, "beta must lie in [0, 1]");
  std::vector<double> wrong_h;
  for (const auto& e : scores.entries)
    if (!e.affiliation_correct) wrong_h.push_back(e.h_score);
  if (wrong_h.empty()) {
    log::warn("no wrongly-affiliated calibration chunks; s_thres = 0, affiliation alone decides");
    return 0.0;
  }
  return percentile_higher(std::move(wrong_h), beta);
}

std::vector<bool> label_calibration(const CalibrationScores& scores, double s_thres) {
  std::vector<bool> labels;
  labels.reserve(scores.entries.size());
  for (const auto& e : scores.entries)
    labels.push_back(e.h_score >= s_thres && e.affiliation_correct);
  return labels;
}

double compute_q_hat(const CalibrationScores& scores, const std::vector<bool>& labels,
                     double alpha, DeltaFormula formula) {
  if (labels.size() != scores.entries.size())
    raise(Errc::usage_error, "labels are not aligned to calibration entries");
  if (alpha <= 0.0 || alpha >= 1.0) raise(Errc::usage_error, "alpha must lie in (0, 1)");

  std::vector<double> nonconformity;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i]) continue;
    if (!scores.entries[i].norm_score)
      raise(Errc::usage_error, "calibration scores must be normalized before computing q_hat");
    nonconformity.push_back(1.0 - *scores.entries[i].norm_score);
  }
  if (nonconformity.empty())
    raise(Errc::degenerate_input, "NoCorrectChunks: no true-labeled calibration chunks");

  double delta = adjusted_level(nonconformity.size(), alpha, formula);
  return percentile_higher(std::move(nonconformity), delta);
}

CalibrationResult calibrate(CalibrationScores& scores, double alpha, double beta, int k,
                            DeltaFormula formula) {
  if (k < 1) raise(Errc::usage_error, "retrieval depth K must be >= 1");
  CalibrationResult out;
  auto [n1, n2] = normalize_scores(scores);
  out.model.n1 = n1;
  out.model.n2 = n2;
  out.model.s_thres = compute_s_thres(scores, beta);
  out.labels = label_calibration(scores, out.model.s_thres);
  out.model.n_correct =
      static_cast<long>(std::count(out.labels.begin(), out.labels.end(), true));
  out.model.q_hat = compute_q_hat(scores, out.labels, alpha, formula);
  out.model.alpha = alpha;
  out.model.beta = beta;
  out.model.k = k;
  return out;
}

TrustLabels predict_trust(const ConformalModel& model, const RetrievalResult& result) {
  if (result.candidates.size() > static_cast<std::size_t>(model.k))
    raise(Errc::validation_error, "result for '" + result.qa_id + "' has more than K=" +
                                      std::to_string(model.k) + " candidates");
  TrustLabels out;
  out.qa_id = result.qa_id;
  out.labels.reserve(result.candidates.size());
  const double threshold = 1.0 - model.q_hat;
  for (const auto& cand : result.candidates) {
    double norm = clamp01((cand.raw_score - model.n1) / (model.n2 - model.n1));
    bool trusted = norm >= threshold;
    out.labels.push_back(trusted);
    if (trusted) ++out.k_trusted;
  }
  out.m1 = out.k_trusted > 0;
  out.m2 = static_cast<double>(out.k_trusted) / static_cast<double>(model.k);
  return out;
}

RetrievalResult filter_chunks(const RetrievalResult& result, const TrustLabels& labels) {
  if (labels.labels.size() != result.candidates.size())
    raise(Errc::usage_error, "trust labels are not aligned to the candidate list");
  RetrievalResult out;
  out.qa_id = result.qa_id;
  for (std::size_t i = 0; i < result.candidates.size(); ++i)
    if (labels.labels[i]) out.candidates.push_back(result.candidates[i]);
  return out;
}

DiagnosticsReport aggregate_diagnostics(const std::vector<TrustLabels>& all_labels,
                                        double alpha) {
  if (all_labels.empty()) raise(Errc::usage_error, "no trust labels to aggregate");
  DiagnosticsReport report;
  report.n_questions = all_labels.size();
  report.alpha = alpha;

  double sum_m1 = 0.0, sum_m2 = 0.0;
  for (const auto& t : all_labels) {
    sum_m1 += t.m1 ? 1.0 : 0.0;
    sum_m2 += t.m2;
  }
  auto n = static_cast<double>(all_labels.size());
  report.mean_m1 = sum_m1 / n;
  report.mean_m2 = sum_m2 / n;

  if (all_labels.size() > 1) {
    double ss1 = 0.0, ss2 = 0.0;
    for (const auto& t : all_labels) {
      double d1 = (t.m1 ? 1.0 : 0.0) - report.mean_m1;
      double d2 = t.m2 - report.mean_m2;
      ss1 += d1 * d1;
      ss2 += d2 * d2;
    }
    report.se_m1 = std::sqrt(ss1 / (n - 1.0)) / std::sqrt(n);
    report.se_m2 = std::sqrt(ss2 / (n - 1.0)) / std::sqrt(n);
  }
  report.deviation = report.mean_m1 - (1.0 - alpha);
  return report;
}

double coverage_audit(const ConformalModel& model, const CalibrationScores& holdout) {
  const double threshold = 1.0 - model.q_hat;
  std::size_t true_count = 0, covered = 0;
  for (const auto& e : holdout.entries) {
    bool label = e.h_score >= model.s_thres && e.affiliation_correct;
    if (!label) continue;
    ++true_count;
    double norm = clamp01((e.raw_score - model.n1) / (model.n2 - model.n1));
    if (norm >= threshold) ++covered;
  }
  if (true_count == 0)
    raise(Errc::degenerate_input, "coverage audit holdout has no true-labeled chunks");
  return static_cast<double>(covered) / static_cast<double>(true_count);
}

std::vector<SweepRow> alpha_sweep(const CalibrationScores& calibration,
                                  const std::vector<bool>& labels,
                                  const CalibrationScores& evaluation, int k,
                                  const std::vector<double>& alphas, DeltaFormula formula) {
  // Group evaluation norm scores per question, keeping entry order.
  std::vector<std::vector<double>> questions;
  std::map<std::string, std::size_t> index;
  for (const auto& e : evaluation.entries) {
    if (!e.norm_score)
      raise(Errc::usage_error, "evaluation scores must be normalized before the sweep");
    auto [it, inserted] = index.emplace(e.qa_id, questions.size());
    if (inserted) questions.emplace_back();
    questions[it->second].push_back(*e.norm_score);
  }
  if (questions.empty()) raise(Errc::usage_error, "no evaluation entries for the sweep");

  std::vector<SweepRow> rows;
  rows.reserve(alphas.size());
  for (double alpha : alphas) {
    double q_hat = compute_q_hat(calibration, labels, alpha, formula);
    double threshold = 1.0 - q_hat;
    double sum_m1 = 0.0, sum_m2 = 0.0;
    for (const auto& q : questions) {
      int trusted = 0;
      for (double s : q)
        if (s >= threshold) ++trusted;
      sum_m1 += trusted > 0 ? 1.0 : 0.0;
      sum_m2 += static_cast<double>(trusted) / static_cast<double>(k);
    }
    auto n = static_cast<double>(questions.size());
    rows.push_back({alpha, sum_m1 / n, sum_m2 / n});
  }
  return rows;
}

json model_to_json(const ConformalModel& model) {
  return {{"n1", model.n1},       {"n2", model.n2},     {"s_thres", model.s_thres},
          {"q_hat", model.q_hat}, {"alpha", model.alpha}, {"beta", model.beta},
          {"K", model.k},         {"n_correct", model.n_correct}};
}

ConformalModel model_from_json(const json& j) {
  ConformalModel m;
  m.n1 = require_field<double>(j, "n1", "model");
  m.n2 = require_field<double>(j, "n2", "model");
  m.s_thres = require_field<double>(j, "s_thres", "model");
  m.q_hat = require_field<double>(j, "q_hat", "model");
  m.alpha = require_field<double>(j, "alpha", "model");
  m.beta = require_field<double>(j, "beta", "model");
  m.k = require_field<int>(j, "K", "model");
  m.n_correct = require_field<long>(j, "n_correct", "model");
  if (m.n2 <= m.n1) raise(Errc::format_error, "model: n2 must exceed n1");
  if (m.k < 1) raise(Errc::format_error, "model: K must be >= 1");
  return m;
}

void save_model(const std::string& path, const ConformalModel& model) {
  save_json_file(path, model_to_json(model));
}

ConformalModel load_model(const std::string& path) {
  return model_from_json(load_json_file(path));
}

void save_calibration_scores(const std::string& path, const CalibrationScores& scores,
                             const std::vector<bool>& labels) {
  if (labels.size() != scores.entries.size())
    raise(Errc::usage_error, "labels are not aligned to calibration entries");
  std::vector<json> lines;
  lines.reserve(scores.entries.size());
  for (std::size_t i = 0; i < scores.entries.size(); ++i) {
    const auto& e = scores.entries[i];
    json line = {{"qa_id", e.qa_id},
                 {"rank", e.rank},
                 {"raw_score", e.raw_score},
                 {"h_score", e.h_score},
                 {"affiliation_correct", e.affiliation_correct},
                 {"label", static_cast<bool>(labels[i])}};
    if (e.norm_score) line["norm_score"] = *e.norm_score;
    lines.push_back(std::move(line));
  }
  write_jsonl(path, lines);
}

std::pair<CalibrationScores, std::vector<bool>> load_calibration_scores(
    const std::string& path) {
  CalibrationScores scores;
  std::vector<bool> labels;
  std::string last_qa;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    std::string where = path + ":" + std::to_string(line);
    CalibrationEntry e;
    e.qa_id = require_field<std::string>(j, "qa_id", where);
    e.rank = require_field<int>(j, "rank", where);
    e.raw_score = require_field<double>(j, "raw_score", where);
    e.h_score = require_field<double>(j, "h_score", where);
    e.affiliation_correct = require_field<bool>(j, "affiliation_correct", where);
    if (j.contains("norm_score")) e.norm_score = require_field<double>(j, "norm_score", where);
    labels.push_back(require_field<bool>(j, "label", where));
    if (e.qa_id != last_qa) {
      ++scores.n_cal;
      last_qa = e.qa_id;
    }
    scores.entries.push_back(std::move(e));
  });
  return {std::move(scores), std::move(labels)};
}

}  // namespace ragcert
