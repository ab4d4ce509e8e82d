#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "ragcert/conformal.hpp"
#include "ragcert/lookback.hpp"
#include "ragcert/retrieval.hpp"
#include "ragcert/similarity.hpp"

namespace ragcert {

// Pipeline-wide knobs. Defaults: chunk_size 512, K 10, alpha 0.1, beta 0,
// Okapi k1/b 1.5/0.75, 1000 classifier iterations with balanced class weights.
struct PipelineConfig {
  int chunk_size = 512;
  int k = 10;
  double alpha = 0.1;
  double beta = 0.0;
  Bm25Params bm25;
  RougeStat rouge_stat = RougeStat::f1;
  FeatureMode lr_mode = FeatureMode::cw;
  ContextDenominator denominator = ContextDenominator::include_pre_qu;
  DeltaFormula delta_formula = DeltaFormula::standard_adjusted;
  bool normalize_lookback = true;
  int clf_max_iter = 1000;
  double clf_l2 = 1.0;
  double clf_tol = 1e-6;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig load(const std::string& path);
};

std::string to_string(RougeStat stat);
std::string to_string(FeatureMode mode);
std::string to_string(ContextDenominator mode);
std::string to_string(DeltaFormula formula);

RougeStat rouge_stat_from_string(const std::string& s);
FeatureMode feature_mode_from_string(const std::string& s);
ContextDenominator denominator_from_string(const std::string& s);
DeltaFormula delta_formula_from_string(const std::string& s);

}  // namespace ragcert
