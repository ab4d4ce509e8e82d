#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragcert/lookback.hpp"

namespace ragcert {

struct LabeledSample {
  std::string qa_id;
  LookbackFeatures features;
  int gamma_ac = 0;  // answer-consistency label, 0 or 1
};

// Single logistic unit over lookback feature vectors.
struct FactualityClassifier {
  std::vector<double> weights;
  double bias = 0.0;
  FeatureMode mode = FeatureMode::cw;
  int layers = 0, heads = 0, slots = 0;
  std::string trained_on;
};

struct FitOptions {
  int max_iter = 1000;
  double l2_strength = 1.0;
  double tol = 1e-6;  // convergence: max |gradient component|
};

struct EvalReport {
  double auroc = 0.0;
  std::size_t n_samples = 0;
  double accuracy_at_round = 0.0;  // fraction where round(p) == gamma_ac
};

// Deterministic shuffle by seed, then a 3:2 train/validation split.
std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> split_train_valid(
    std::vector<LabeledSample> samples, std::uint64_t seed);

// L2-regularized, class-weight-balanced negative log-likelihood of the
// logistic unit, with its analytic gradient. sample_weights must align with
// samples; the bias is not regularized.
struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad_weights;
  double grad_bias = 0.0;
};
LossGrad logistic_loss(const std::vector<double>& weights, double bias,
                       const std::vector<LabeledSample>& samples,
                       const std::vector<double>& sample_weights, double l2_strength);

// Per-class weights n_samples / (2 * n_class), i.e. sklearn's "balanced".
std::vector<double> balanced_weights(const std::vector<LabeledSample>& samples);

// Full-batch gradient descent with backtracking line search; deterministic.
// A single-class training set raises OneClassOnly.
FactualityClassifier fit(const std::vector<LabeledSample>& train, const FitOptions& options = {});

// sigmoid(w . v + b); raises on feature-mode or length mismatch.
double predict_factuality(const FactualityClassifier& clf, const LookbackFeatures& features);

// Mann-Whitney AUROC with half credit for ties; raises on single-class labels.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

EvalReport evaluate(const FactualityClassifier& clf, const std::vector<LabeledSample>& samples);

struct CrossValReport {
  std::vector<std::string> group_ids;  // sorted
  std::vector<std::vector<double>> auroc;  // [train group][eval group]
};

// Entry (i, j): fit on group i's train split, AUROC on group j's validation
// split; the diagonal is in-group validation. Any group violating the fit
// preconditions raises with the group named.
CrossValReport cross_validate_groups(
    const std::map<std::string, std::vector<LabeledSample>>& groups, std::uint64_t seed,
    const FitOptions& options = {});

nlohmann::json classifier_to_json(const FactualityClassifier& clf);
FactualityClassifier classifier_from_json(const nlohmann::json& j);
void save_classifier(const std::string& path, const FactualityClassifier& clf);
FactualityClassifier load_classifier(const std::string& path);

// Line-delimited {"qa_id", "gamma_ac": real in [0,1]}; values binarize at 0.5.
std::map<std::string, int> load_labels(const std::string& path);

// Joins features with labels; a feature without a label raises.
std::vector<LabeledSample> join_samples(const std::vector<LookbackFeatures>& features,
                                        const std::map<std::string, int>& labels);

}  // namespace ragcert
