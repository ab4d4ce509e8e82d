#include "ragcert/config.hpp"

#include "ragcert/error.hpp"
#include "ragcert/io.hpp"

namespace ragcert {

using nlohmann::json;

std::string to_string(RougeStat stat) {
  switch (stat) {
    case RougeStat::precision: return "precision";
    case RougeStat::recall: return "recall";
    default: return "f1";
  }
}

std::string to_string(FeatureMode mode) { return mode == FeatureMode::cw ? "cw" : "fc"; }

std::string to_string(ContextDenominator mode) {
  return mode == ContextDenominator::include_pre_qu ? "include-pre-qu" : "chunks-only";
}

std::string to_string(DeltaFormula formula) {
  return formula == DeltaFormula::standard_adjusted ? "standard" : "literal";
}

RougeStat rouge_stat_from_string(const std::string& s) {
  if (s == "f1") return RougeStat::f1;
  if (s == "precision") return RougeStat::precision;
  if (s == "recall") return RougeStat::recall;
  raise(Errc::usage_error, "rouge_stat must be f1, precision, or recall, got '" + s + "'");
}

FeatureMode feature_mode_from_string(const std::string& s) {
  if (s == "cw") return FeatureMode::cw;
  if (s == "fc") return FeatureMode::fc;
  raise(Errc::usage_error, "mode must be cw or fc, got '" + s + "'");
}

ContextDenominator denominator_from_string(const std::string& s) {
  if (s == "include-pre-qu") return ContextDenominator::include_pre_qu;
  if (s == "chunks-only") return ContextDenominator::chunks_only;
  raise(Errc::usage_error, "denominator must be include-pre-qu or chunks-only, got '" + s + "'");
}

DeltaFormula delta_formula_from_string(const std::string& s) {
  if (s == "standard") return DeltaFormula::standard_adjusted;
  if (s == "literal") return DeltaFormula::literal;
  raise(Errc::usage_error, "delta_formula must be standard or literal, got '" + s + "'");
}

json PipelineConfig::to_json() const {
  return {{"chunk_size", chunk_size},
          {"k", k},
          {"alpha", alpha},
          {"beta", beta},
          {"bm25_k1", bm25.k1},
          {"bm25_b", bm25.b},
          {"rouge_stat", ragcert::to_string(rouge_stat)},
          {"lr_mode", ragcert::to_string(lr_mode)},
          {"denominator", ragcert::to_string(denominator)},
          {"delta_formula", ragcert::to_string(delta_formula)},
          {"normalize_lookback", normalize_lookback},
          {"clf_max_iter", clf_max_iter},
          {"clf_l2", clf_l2},
          {"clf_tol", clf_tol},
          {"seed", seed}};
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  PipelineConfig cfg;
  if (!j.is_object()) raise(Errc::format_error, "config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (key == "chunk_size") cfg.chunk_size = it.value().get<int>();
    else if (key == "k") cfg.k = it.value().get<int>();
    else if (key == "alpha") cfg.alpha = it.value().get<double>();
    else if (key == "beta") cfg.beta = it.value().get<double>();
    else if (key == "bm25_k1") cfg.bm25.k1 = it.value().get<double>();
    else if (key == "bm25_b") cfg.bm25.b = it.value().get<double>();
    else if (key == "rouge_stat") cfg.rouge_stat = rouge_stat_from_string(it.value().get<std::string>());
    else if (key == "lr_mode") cfg.lr_mode = feature_mode_from_string(it.value().get<std::string>());
    else if (key == "denominator") cfg.denominator = denominator_from_string(it.value().get<std::string>());
    else if (key == "delta_formula") cfg.delta_formula = delta_formula_from_string(it.value().get<std::string>());
    else if (key == "normalize_lookback") cfg.normalize_lookback = it.value().get<bool>();
    else if (key == "clf_max_iter") cfg.clf_max_iter = it.value().get<int>();
    else if (key == "clf_l2") cfg.clf_l2 = it.value().get<double>();
    else if (key == "clf_tol") cfg.clf_tol = it.value().get<double>();
    else if (key == "seed") cfg.seed = it.value().get<std::uint64_t>();
    else raise(Errc::format_error, "unknown config key '" + key + "'");
  }
  if (cfg.chunk_size < 1) raise(Errc::usage_error, "chunk_size must be >= 1");
  if (cfg.k < 1) raise(Errc::usage_error, "k must be >= 1");
  if (cfg.alpha <= 0.0 || cfg.alpha >= 1.0) raise(Errc::usage_error, "alpha must lie in (0, 1)");
  if (cfg.beta < 0.0 || cfg.beta > 1.0) raise(Errc::usage_error, "beta must lie in [0, 1]");
  return cfg;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  return from_json(load_json_file(path));
}

}  // namespace ragcert
