#include "ragcert/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ragcert/error.hpp"
#include "ragcert/io.hpp"
#include "ragcert/rng.hpp"

namespace ragcert {

using nlohmann::json;

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) {
  if (z > 30.0) return z;
  if (z < -30.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

double dot(const std::vector<double>& w, const std::vector<double>& v) {
  return std::inner_product(w.begin(), w.end(), v.begin(), 0.0);
}

void check_features(const FactualityClassifier& clf, const LookbackFeatures& features) {
  if (features.mode != clf.mode)
    raise(Errc::usage_error, "feature mode does not match the classifier mode");
  if (features.vec.size() != clf.weights.size())
    raise(Errc::usage_error, "feature vector length " + std::to_string(features.vec.size()) +
                                 " does not match classifier weight length " +
                                 std::to_string(clf.weights.size()));
}

}  // namespace

std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> split_train_valid(
    std::vector<LabeledSample> samples, std::uint64_t seed) {
  if (samples.size() < 5)
    raise(Errc::usage_error,
          "need at least 5 samples for a 3:2 split, got " + std::to_string(samples.size()));
  Rng rng(seed);
  rng.shuffle(samples);
  std::size_t n_train =
      static_cast<std::size_t>(std::llround(0.6 * static_cast<double>(samples.size())));
  std::vector<LabeledSample> train(samples.begin(), samples.begin() + n_train);
  std::vector<LabeledSample> valid(samples.begin() + n_train, samples.end());
  return {std::move(train), std::move(valid)};
}

std::vector<double> balanced_weights(const std::vector<LabeledSample>& samples) {
  double n_pos = 0.0;
  for (const auto& s : samples) n_pos += s.gamma_ac;
  double n_neg = static_cast<double>(samples.size()) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0)
    raise(Errc::degenerate_input, "OneClassOnly: training set contains a single class");
  double n = static_cast<double>(samples.size());
  std::vector<double> weights(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    weights[i] = samples[i].gamma_ac ? n / (2.0 * n_pos) : n / (2.0 * n_neg);
  return weights;
}

LossGrad logistic_loss(const std::vector<double>& weights, double bias,
                       const std::vector<LabeledSample>& samples,
                       const std::vector<double>& sample_weights, double l2_strength) {
  if (sample_weights.size() != samples.size())
    raise(Errc::usage_error, "sample weights are not aligned to the samples");
  LossGrad out;
  out.grad_weights.assign(weights.size(), 0.0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& v = samples[i].features.vec;
    if (v.size() != weights.size())
      raise(Errc::usage_error, "sample '" + samples[i].qa_id + "' has feature length " +
                                   std::to_string(v.size()) + ", expected " +
                                   std::to_string(weights.size()));
    double y = samples[i].gamma_ac;
    double cw = sample_weights[i];
    double z = dot(weights, v) + bias;
    out.loss += cw * (softplus(z) - y * z);
    double residual = cw * (sigmoid(z) - y);
    for (std::size_t d = 0; d < weights.size(); ++d) out.grad_weights[d] += residual * v[d];
    out.grad_bias += residual;
  }
  for (std::size_t d = 0; d < weights.size(); ++d) {
    out.loss += 0.5 * l2_strength * weights[d] * weights[d];
    out.grad_weights[d] += l2_strength * weights[d];
  }
  return out;
}

FactualityClassifier fit(const std::vector<LabeledSample>& train, const FitOptions& options) {
  if (train.empty()) raise(Errc::usage_error, "cannot fit on an empty training set");
  const auto& first = train.front().features;
  for (const auto& s : train)
    if (s.features.mode != first.mode)
      raise(Errc::usage_error, "mixed feature modes in the training set");

  auto sample_weights = balanced_weights(train);

  FactualityClassifier clf;
  clf.mode = first.mode;
  clf.layers = first.layers;
  clf.heads = first.heads;
  clf.slots = first.slots;
  clf.weights.assign(first.vec.size(), 0.0);
  clf.bias = 0.0;

  auto state = logistic_loss(clf.weights, clf.bias, train, sample_weights, options.l2_strength);
  for (int iter = 0; iter < options.max_iter; ++iter) {
    double max_grad = std::abs(state.grad_bias);
    for (double g : state.grad_weights) max_grad = std::max(max_grad, std::abs(g));
    if (max_grad < options.tol) break;

    double grad_norm_sq = state.grad_bias * state.grad_bias;
    for (double g : state.grad_weights) grad_norm_sq += g * g;

    // Backtracking line search (Armijo, c = 1e-4).
    double step = 1.0;
    std::vector<double> next_w(clf.weights.size());
    bool moved = false;
    for (int half = 0; half < 60; ++half) {
      for (std::size_t d = 0; d < clf.weights.size(); ++d)
        next_w[d] = clf.weights[d] - step * state.grad_weights[d];
      double next_b = clf.bias - step * state.grad_bias;
      auto next = logistic_loss(next_w, next_b, train, sample_weights, options.l2_strength);
      if (next.loss <= state.loss - 1e-4 * step * grad_norm_sq) {
        clf.weights = next_w;
        clf.bias = next_b;
        state = std::move(next);
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;  // no admissible step left
  }
  return clf;
}

double predict_factuality(const FactualityClassifier& clf, const LookbackFeatures& features) {
  check_features(clf, features);
  return sigmoid(dot(clf.weights, features.vec) + clf.bias);
}

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    raise(Errc::usage_error, "scores and labels differ in length");
  if (scores.empty()) raise(Errc::usage_error, "auroc of an empty set");

  std::size_t n_pos = 0;
  for (int y : labels) n_pos += y != 0;
  std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0)
    raise(Errc::degenerate_input, "auroc needs both classes in the labels");

  // Rank-sum with average ranks over ties: equals pairwise counting with
  // half credit per tied pair.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based average over the tie group
    for (std::size_t t = i; t < j; ++t)
      if (labels[order[t]] != 0) rank_sum_pos += avg_rank;
    i = j;
  }
  double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

EvalReport evaluate(const FactualityClassifier& clf, const std::vector<LabeledSample>& samples) {
  if (samples.empty()) raise(Errc::usage_error, "cannot evaluate on an empty sample set");
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(samples.size());
  std::size_t correct = 0;
  for (const auto& s : samples) {
    double p = predict_factuality(clf, s.features);
    scores.push_back(p);
    labels.push_back(s.gamma_ac);
    int rounded = p >= 0.5 ? 1 : 0;
    correct += rounded == s.gamma_ac;
  }
  EvalReport report;
  report.auroc = auroc(scores, labels);
  report.n_samples = samples.size();
  report.accuracy_at_round = static_cast<double>(correct) / static_cast<double>(samples.size());
  return report;
}

CrossValReport cross_validate_groups(
    const std::map<std::string, std::vector<LabeledSample>>& groups, std::uint64_t seed,
    const FitOptions& options) {
  if (groups.size() < 2)
    raise(Errc::usage_error, "cross-validation needs at least 2 groups");

  CrossValReport report;
  std::vector<std::vector<LabeledSample>> trains, valids;
  for (const auto& [group_id, samples] : groups) {
    report.group_ids.push_back(group_id);
    try {
      auto [train, valid] = split_train_valid(samples, seed);
      trains.push_back(std::move(train));
      valids.push_back(std::move(valid));
    } catch (const RagError& err) {
      raise(err.code(), "group '" + group_id + "': " + err.what());
    }
  }

  report.auroc.assign(groups.size(), std::vector<double>(groups.size(), 0.0));
  for (std::size_t i = 0; i < trains.size(); ++i) {
    FactualityClassifier clf;
    try {
      clf = fit(trains[i], options);
    } catch (const RagError& err) {
      raise(err.code(), "group '" + report.group_ids[i] + "': " + err.what());
    }
    for (std::size_t j = 0; j < valids.size(); ++j) {
      try {
        report.auroc[i][j] = evaluate(clf, valids[j]).auroc;
      } catch (const RagError& err) {
        raise(err.code(), "group '" + report.group_ids[j] + "': " + err.what());
      }
    }
  }
  return report;
}

json classifier_to_json(const FactualityClassifier& clf) {
  return {{"feature_mode", clf.mode == FeatureMode::cw ? "cw" : "fc"},
          {"L", clf.layers},
          {"H", clf.heads},
          {"K", clf.slots},
          {"weights", clf.weights},
          {"bias", clf.bias},
          {"trained_on", clf.trained_on}};
}

FactualityClassifier classifier_from_json(const json& j) {
  FactualityClassifier clf;
  std::string mode = require_field<std::string>(j, "feature_mode", "classifier");
  if (mode == "cw")
    clf.mode = FeatureMode::cw;
  else if (mode == "fc")
    clf.mode = FeatureMode::fc;
  else
    raise(Errc::format_error, "classifier: feature_mode must be 'cw' or 'fc'");
  clf.layers = require_field<int>(j, "L", "classifier");
  clf.heads = require_field<int>(j, "H", "classifier");
  clf.slots = require_field<int>(j, "K", "classifier");
  clf.weights = require_field<std::vector<double>>(j, "weights", "classifier");
  clf.bias = require_field<double>(j, "bias", "classifier");
  if (j.contains("trained_on")) clf.trained_on = j.at("trained_on").get<std::string>();
  return clf;
}

void save_classifier(const std::string& path, const FactualityClassifier& clf) {
  save_json_file(path, classifier_to_json(clf));
}

FactualityClassifier load_classifier(const std::string& path) {
  return classifier_from_json(load_json_file(path));
}

std::map<std::string, int> load_labels(const std::string& path) {
  std::map<std::string, int> labels;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    std::string where = path + ":" + std::to_string(line);
    std::string qa_id = require_field<std::string>(j, "qa_id", where);
    double gamma = require_field<double>(j, "gamma_ac", where);
    if (gamma < 0.0 || gamma > 1.0)
      raise(Errc::validation_error, where + ": gamma_ac must lie in [0, 1]");
    if (!labels.emplace(qa_id, gamma >= 0.5 ? 1 : 0).second)
      raise(Errc::validation_error, where + ": duplicate qa_id '" + qa_id + "'");
  });
  return labels;
}

std::vector<LabeledSample> join_samples(const std::vector<LookbackFeatures>& features,
                                        const std::map<std::string, int>& labels) {
  std::vector<LabeledSample> samples;
  samples.reserve(features.size());
  for (const auto& f : features) {
    auto it = labels.find(f.qa_id);
    if (it == labels.end())
      raise(Errc::validation_error, "no gamma_ac label for qa_id '" + f.qa_id + "'");
    samples.push_back({f.qa_id, f, it->second});
  }
  return samples;
}

}  // namespace ragcert
