#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragcert/corpus.hpp"
#include "ragcert/retrieval.hpp"
#include "ragcert/similarity.hpp"

namespace ragcert {

// One retrieved chunk of one calibration/holdout question, with the ground
// truth ingredients: similarity to the reference answer and whether the
// chunk's source document matches the gold document.
struct CalibrationEntry {
  std::string qa_id;
  int rank = 0;  // 1-based position in the candidate list
  double raw_score = 0.0;
  std::optional<double> norm_score;
  double h_score = 0.0;
  bool affiliation_correct = false;
};

struct CalibrationScores {
  std::vector<CalibrationEntry> entries;
  int n_cal = 0;  // number of questions
};

// How the adjusted confidence level is computed from (n, alpha).
// standard_adjusted: min(1, ceil((n+1)(1-alpha)) / n).
// literal: ceil((n+1)(1-alpha)/n) clipped to 1, which selects the maximum
// nonconformity for any realistic n; kept for comparison.
enum class DeltaFormula { standard_adjusted, literal };

// The fitted calibration artifact; immutable once built.
struct ConformalModel {
  double n1 = 0.0;      // min raw calibration score
  double n2 = 1.0;      // max raw calibration score
  double s_thres = 0.0; // similarity threshold for "correct" ground truth
  double q_hat = 0.0;
  double alpha = 0.1;
  double beta = 0.0;
  int k = 10;           // retrieval depth
  long n_correct = 0;   // true-labeled calibration chunks behind q_hat
};

struct TrustLabels {
  std::string qa_id;
  std::vector<bool> labels;  // aligned to the candidate list
  int k_trusted = 0;
  bool m1 = false;    // at least one trusted chunk
  double m2 = 0.0;    // trusted fraction of K
};

struct DiagnosticsReport {
  std::size_t n_questions = 0;
  double alpha = 0.0;
  double mean_m1 = 0.0;
  double se_m1 = 0.0;
  double mean_m2 = 0.0;
  double se_m2 = 0.0;
  double deviation = 0.0;  // mean_m1 - (1 - alpha)
};

// Nearest-rank "higher" percentile: value at 1-based index ceil(p*m) of the
// ascending sort, clamped to [1, m].
double percentile_higher(std::vector<double> values, double p);

// The adjusted level delta for a given formula; result in (0, 1].
double adjusted_level(std::size_t n, double alpha, DeltaFormula formula);

// Joins retrieval results with ground truth: h = RougeL(chunk text, reference
// answer), affiliation from source document ids. Entry order follows the
// results; ranks are 1-based within each question.
CalibrationScores build_calibration_scores(const std::vector<RetrievalResult>& results,
                                           const ChunkStore& store,
                                           const std::vector<QaRecord>& qa,
                                           RougeStat stat = RougeStat::f1);

// Global min-max rescaling of raw scores into [0,1]; returns (n1, n2).
// All raw scores equal raises DegenerateScores.
std::pair<double, double> normalize_scores(CalibrationScores& scores);

// Fills norm_score from an existing model's bounds, clamped into [0,1].
void normalize_with(CalibrationScores& scores, const ConformalModel& model);

// beta-percentile of h among wrongly-affiliated chunks. No wrongly-affiliated
// chunks -> 0 with a warning (affiliation alone decides).
double compute_s_thres(const CalibrationScores& scores, double beta);

// label = (h >= s_thres) AND affiliation_correct, aligned to entries.
std::vector<bool> label_calibration(const CalibrationScores& scores, double s_thres);

// delta-percentile of {1 - norm_score} over true-labeled chunks.
// Zero true labels raises NoCorrectChunks.
double compute_q_hat(const CalibrationScores& scores, const std::vector<bool>& labels,
                     double alpha, DeltaFormula formula = DeltaFormula::standard_adjusted);

struct CalibrationResult {
  ConformalModel model;
  std::vector<bool> labels;
};

// normalize -> s_thres -> labels -> q_hat, in one pass.
CalibrationResult calibrate(CalibrationScores& scores, double alpha, double beta, int k,
                            DeltaFormula formula = DeltaFormula::standard_adjusted);

// Trust rule: normalized score >= 1 - q_hat; m2 uses the model's K.
TrustLabels predict_trust(const ConformalModel& model, const RetrievalResult& result);

// Keeps only trusted candidates, original order preserved.
RetrievalResult filter_chunks(const RetrievalResult& result, const TrustLabels& labels);

DiagnosticsReport aggregate_diagnostics(const std::vector<TrustLabels>& all_labels, double alpha);

// Empirical P(trusted | label = true) on a holdout labeled with the
// calibration-time s_thres. Raises if the holdout has no true-labeled chunks.
double coverage_audit(const ConformalModel& model, const CalibrationScores& holdout);

struct SweepRow {
  double alpha = 0.0;
  double mean_m1 = 0.0;
  double mean_m2 = 0.0;
};

// Re-derives q_hat per alpha from the calibration scores and evaluates m1/m2
// on the (already normalized) evaluation set.
std::vector<SweepRow> alpha_sweep(const CalibrationScores& calibration,
                                  const std::vector<bool>& labels,
                                  const CalibrationScores& evaluation, int k,
                                  const std::vector<double>& alphas,
                                  DeltaFormula formula = DeltaFormula::standard_adjusted);

nlohmann::json model_to_json(const ConformalModel& model);
ConformalModel model_from_json(const nlohmann::json& j);
void save_model(const std::string& path, const ConformalModel& model);
ConformalModel load_model(const std::string& path);

void save_calibration_scores(const std::string& path, const CalibrationScores& scores,
                             const std::vector<bool>& labels);
// Returns scores plus the persisted labels.
std::pair<CalibrationScores, std::vector<bool>> load_calibration_scores(const std::string& path);

}  // namespace ragcert
