#include "ragcert/cli.hpp"

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ragcert/classifier.hpp"
#include "ragcert/config.hpp"
#include "ragcert/conformal.hpp"
#include "ragcert/corpus.hpp"
#include "ragcert/error.hpp"
#include "ragcert/io.hpp"
#include "ragcert/log.hpp"
#include "ragcert/lookback.hpp"
#include "ragcert/retrieval.hpp"
#include "ragcert/similarity.hpp"
#include "ragcert/synth.hpp"
#include "ragcert/text.hpp"
#include "ragcert/version.hpp"

namespace ragcert {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<int> k;
  std::optional<int> chunk_size;
  std::optional<std::string> mode;
  std::optional<std::string> denominator;
  std::optional<std::string> delta_formula;
  std::optional<std::uint64_t> seed;

  PipelineConfig resolve() const {
    PipelineConfig cfg;
    if (!config_path.empty()) cfg = PipelineConfig::load(config_path);
    if (alpha) cfg.alpha = *alpha;
    if (beta) cfg.beta = *beta;
    if (k) cfg.k = *k;
    if (chunk_size) cfg.chunk_size = *chunk_size;
    if (mode) cfg.lr_mode = feature_mode_from_string(*mode);
    if (denominator) cfg.denominator = denominator_from_string(*denominator);
    if (delta_formula) cfg.delta_formula = delta_formula_from_string(*delta_formula);
    if (seed) cfg.seed = *seed;
    if (cfg.alpha <= 0.0 || cfg.alpha >= 1.0) raise(Errc::usage_error, "alpha must lie in (0, 1)");
    if (cfg.beta < 0.0 || cfg.beta > 1.0) raise(Errc::usage_error, "beta must lie in [0, 1]");
    if (cfg.k < 1) raise(Errc::usage_error, "k must be >= 1");
    if (cfg.chunk_size < 1) raise(Errc::usage_error, "chunk_size must be >= 1");
    return cfg;
  }
};

void add_common(CLI::App* sub, CommonOpts& opts) {
  sub->add_option("--config", opts.config_path, "JSON config file; flags override its values");
  sub->add_option("--out-dir", opts.out_dir, "directory for output artifacts")->required();
  sub->add_option("--alpha", opts.alpha, "conformal error rate in (0,1)");
  sub->add_option("--beta", opts.beta, "similarity threshold percentile in [0,1]");
  sub->add_option("--k", opts.k, "retrieval depth K");
  sub->add_option("--chunk-size", opts.chunk_size, "chunk size in whitespace tokens");
  sub->add_option("--mode", opts.mode, "lookback feature mode")
      ->check(CLI::IsMember({"cw", "fc"}));
  sub->add_option("--denominator", opts.denominator, "lookback context denominator")
      ->check(CLI::IsMember({"include-pre-qu", "chunks-only"}));
  sub->add_option("--delta-formula", opts.delta_formula, "adjusted level formula")
      ->check(CLI::IsMember({"standard", "literal"}));
  sub->add_option("--seed", opts.seed, "master random seed");
}

std::string ensure_out_dir(const std::string& out_dir) {
  fs::create_directories(out_dir);
  return out_dir;
}

void require_input(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) raise(Errc::io_error, "missing " + what + ": " + path);
}

// Manifests record basenames and digests only, so identical runs into
// different directories stay byte-identical.
void write_manifest(const std::string& out_dir, const std::string& command,
                    const PipelineConfig& cfg, const std::vector<std::string>& input_paths,
                    std::vector<std::string> output_names) {
  json inputs = json::array();
  std::vector<std::pair<std::string, std::string>> entries;
  for (const auto& p : input_paths)
    entries.emplace_back(fs::path(p).filename().string(), file_digest(p));
  std::sort(entries.begin(), entries.end());
  for (const auto& [name, digest] : entries)
    inputs.push_back({{"file", name}, {"digest", digest}});
  std::sort(output_names.begin(), output_names.end());

  json config = cfg.to_json();
  json manifest = {{"command", command},
                   {"version", kVersion},
                   {"config", config},
                   {"config_hash", fnv1a64_hex(config.dump())},
                   {"digest_algorithm", "fnv1a64"},
                   {"inputs", inputs},
                   {"outputs", output_names}};
  save_json_file(out_dir + "/manifest_" + command + ".json", manifest);
}

void validate_qa_against_store(const std::vector<QaRecord>& qa, const ChunkStore& store) {
  for (const auto& r : qa)
    if (!store.has_doc(r.gold_doc_id))
      raise(Errc::validation_error,
            "qa record '" + r.qa_id + "' references unknown gold_doc_id '" + r.gold_doc_id + "'");
}

// ---- subcommand bodies ----------------------------------------------------

int cmd_ingest(const CommonOpts& common, const std::string& corpus_path,
               const std::string& qa_path) {
  auto cfg = common.resolve();
  require_input(corpus_path, "corpus file");
  require_input(qa_path, "qa file");
  auto out = ensure_out_dir(common.out_dir);

  auto docs = load_corpus(corpus_path);
  auto qa = load_qa_dataset(qa_path);
  std::unordered_set<std::string> doc_ids;
  for (const auto& d : docs) doc_ids.insert(d.doc_id);
  validate_qa(qa, doc_ids);

  std::vector<Chunk> chunks;
  for (const auto& d : docs) {
    auto doc_chunks = chunk_document(d, cfg.chunk_size);
    chunks.insert(chunks.end(), doc_chunks.begin(), doc_chunks.end());
  }
  save_chunks(out + "/chunks.jsonl", chunks);
  log::info("ingested " + std::to_string(docs.size()) + " documents into " +
            std::to_string(chunks.size()) + " chunks");
  write_manifest(out, "ingest", cfg, {corpus_path, qa_path}, {"chunks.jsonl"});
  return 0;
}

int cmd_index(const CommonOpts& common, const std::string& chunks_path) {
  auto cfg = common.resolve();
  require_input(chunks_path, "chunk store");
  auto out = ensure_out_dir(common.out_dir);

  auto chunks = load_chunks(chunks_path);
  auto index = InvertedIndex::build(chunks);
  save_json_file(out + "/index.json", index.to_json());
  write_manifest(out, "index", cfg, {chunks_path}, {"index.json"});
  return 0;
}

std::vector<RetrievalResult> gather_results(const PipelineConfig& cfg,
                                            const std::string& scores_path,
                                            const std::string& index_path,
                                            const ChunkStore& store,
                                            const std::vector<QaRecord>& qa) {
  if (!scores_path.empty()) {
    require_input(scores_path, "score file");
    return load_external_scores(scores_path, cfg.k, store, qa);
  }
  require_input(index_path, "index file");
  auto index = InvertedIndex::from_json(load_json_file(index_path));
  std::vector<RetrievalResult> results;
  results.reserve(qa.size());
  for (const auto& r : qa)
    results.push_back(index.retrieve_top_k(r.qa_id, r.question, cfg.k, cfg.bm25));
  return results;
}

int cmd_calibrate(const CommonOpts& common, const std::string& chunks_path,
                  const std::string& qa_path, const std::string& scores_path,
                  const std::string& index_path) {
  auto cfg = common.resolve();
  require_input(chunks_path, "chunk store");
  require_input(qa_path, "qa file");
  if (scores_path.empty() == index_path.empty())
    raise(Errc::usage_error, "calibrate needs exactly one of --scores or --index");
  auto out = ensure_out_dir(common.out_dir);

  auto store = ChunkStore::build(load_chunks(chunks_path));
  auto qa = load_qa_dataset(qa_path);
  validate_qa_against_store(qa, store);
  auto results = gather_results(cfg, scores_path, index_path, store, qa);

  auto scores = build_calibration_scores(results, store, qa, cfg.rouge_stat);
  auto calibration = calibrate(scores, cfg.alpha, cfg.beta, cfg.k, cfg.delta_formula);
  save_model(out + "/model.json", calibration.model);
  save_calibration_scores(out + "/cal_scores.jsonl", scores, calibration.labels);
  log::info("calibrated on " + std::to_string(scores.n_cal) + " questions; q_hat = " +
            std::to_string(calibration.model.q_hat));

  std::vector<std::string> inputs = {chunks_path, qa_path,
                                     scores_path.empty() ? index_path : scores_path};
  write_manifest(out, "calibrate", cfg, inputs, {"model.json", "cal_scores.jsonl"});
  return 0;
}

int cmd_certify(const CommonOpts& common, const std::string& model_path,
                const std::string& chunks_path, const std::string& qa_path,
                const std::string& scores_path, bool filter) {
  auto cfg = common.resolve();
  require_input(model_path, "model file");
  require_input(chunks_path, "chunk store");
  require_input(qa_path, "qa file");
  require_input(scores_path, "score file");
  auto out = ensure_out_dir(common.out_dir);

  auto model = load_model(model_path);
  auto store = ChunkStore::build(load_chunks(chunks_path));
  auto qa = load_qa_dataset(qa_path);
  auto results = load_external_scores(scores_path, model.k, store, qa);

  std::vector<json> label_lines;
  std::vector<RetrievalResult> filtered;
  for (const auto& r : results) {
    auto trust = predict_trust(model, r);
    std::vector<bool> labels(trust.labels.begin(), trust.labels.end());
    label_lines.push_back({{"qa_id", trust.qa_id},
                           {"labels", labels},
                           {"k_trusted", trust.k_trusted},
                           {"m1", trust.m1},
                           {"m2", trust.m2}});
    if (filter) filtered.push_back(filter_chunks(r, trust));
  }
  write_jsonl(out + "/trust_labels.jsonl", label_lines);
  std::vector<std::string> outputs = {"trust_labels.jsonl"};
  if (filter) {
    save_scores(out + "/filtered_scores.jsonl", filtered);
    outputs.push_back("filtered_scores.jsonl");
  }
  write_manifest(out, "certify", cfg, {model_path, chunks_path, qa_path, scores_path}, outputs);
  return 0;
}

std::vector<double> parse_sweep(const std::string& spec) {
  double lo = 0.0, hi = 0.0, step = 0.0;
  auto first = spec.find(':');
  auto second = spec.find(':', first == std::string::npos ? first : first + 1);
  if (first == std::string::npos || second == std::string::npos)
    raise(Errc::usage_error, "--alpha-sweep expects lo:hi:step, got '" + spec + "'");
  try {
    lo = std::stod(spec.substr(0, first));
    hi = std::stod(spec.substr(first + 1, second - first - 1));
    step = std::stod(spec.substr(second + 1));
  } catch (const std::exception&) {
    raise(Errc::usage_error, "--alpha-sweep expects numeric lo:hi:step, got '" + spec + "'");
  }
  if (lo <= 0.0 || hi >= 1.0 || lo > hi || step <= 0.0)
    raise(Errc::usage_error, "--alpha-sweep needs 0 < lo <= hi < 1 and step > 0");
  std::vector<double> alphas;
  for (double a = lo; a <= hi + 1e-12; a += step) alphas.push_back(a);
  return alphas;
}

int cmd_diagnose(const CommonOpts& common, const std::string& model_path,
                 const std::string& chunks_path, const std::string& qa_path,
                 const std::string& scores_path, const std::string& cal_scores_path,
                 const std::string& sweep_spec) {
  auto cfg = common.resolve();
  require_input(model_path, "model file");
  require_input(chunks_path, "chunk store");
  require_input(qa_path, "qa file");
  require_input(scores_path, "score file");
  auto out = ensure_out_dir(common.out_dir);

  auto model = load_model(model_path);
  auto store = ChunkStore::build(load_chunks(chunks_path));
  auto qa = load_qa_dataset(qa_path);
  auto results = load_external_scores(scores_path, model.k, store, qa);

  std::vector<TrustLabels> all;
  all.reserve(results.size());
  for (const auto& r : results) all.push_back(predict_trust(model, r));
  auto report = aggregate_diagnostics(all, model.alpha);

  auto holdout = build_calibration_scores(results, store, qa, cfg.rouge_stat);
  normalize_with(holdout, model);

  json diag = {{"alpha", report.alpha},
               {"n_questions", report.n_questions},
               {"mean_m1", report.mean_m1},
               {"se_m1", report.se_m1},
               {"mean_m2", report.mean_m2},
               {"se_m2", report.se_m2},
               {"deviation", report.deviation}};
  try {
    diag["coverage"] = coverage_audit(model, holdout);
  } catch (const RagError&) {
    log::warn("holdout has no true-labeled chunks; coverage audit skipped");
    diag["coverage"] = nullptr;
  }

  std::vector<std::string> outputs = {"diagnostics.json"};
  std::vector<std::string> inputs = {model_path, chunks_path, qa_path, scores_path};
  if (!sweep_spec.empty()) {
    if (cal_scores_path.empty())
      raise(Errc::usage_error, "--alpha-sweep requires --cal-scores");
    require_input(cal_scores_path, "calibration scores");
    inputs.push_back(cal_scores_path);
    auto [cal, labels] = load_calibration_scores(cal_scores_path);
    auto rows = alpha_sweep(cal, labels, holdout, model.k, parse_sweep(sweep_spec),
                            cfg.delta_formula);
    std::string tsv = "alpha\tmean_m1\tmean_m2\n";
    json sweep_json = json::array();
    for (const auto& row : rows) {
      tsv += json(row.alpha).dump() + "\t" + json(row.mean_m1).dump() + "\t" +
             json(row.mean_m2).dump() + "\n";
      sweep_json.push_back(
          {{"alpha", row.alpha}, {"mean_m1", row.mean_m1}, {"mean_m2", row.mean_m2}});
    }
    write_file(out + "/sweep.tsv", tsv);
    diag["sweep"] = sweep_json;
    outputs.push_back("sweep.tsv");
  }
  save_json_file(out + "/diagnostics.json", diag);
  write_manifest(out, "diagnose", cfg, inputs, outputs);
  return 0;
}

int cmd_lookback(const CommonOpts& common, const std::string& attn_path, bool raw,
                 bool no_normalize) {
  auto cfg = common.resolve();
  require_input(attn_path, "attention file");
  auto out = ensure_out_dir(common.out_dir);

  std::vector<AttentionDump> dumps;
  if (raw) {
    for (const auto& r : load_raw_attention(attn_path)) dumps.push_back(segment_average(r));
  } else {
    dumps = load_attention_dumps(attn_path);
  }

  std::vector<LookbackFeatures> features;
  features.reserve(dumps.size());
  for (const auto& d : dumps) {
    auto f = cfg.lr_mode == FeatureMode::cw ? lookback_ratios_cw(d, cfg.k, cfg.denominator)
                                            : lookback_ratios_fc(d);
    if (cfg.normalize_lookback && !no_normalize) f = normalize_features(std::move(f));
    features.push_back(std::move(f));
  }
  save_features(out + "/features.jsonl", features);
  write_manifest(out, "lookback", cfg, {attn_path}, {"features.jsonl"});
  return 0;
}

json report_json(const EvalReport& r) {
  return {{"auroc", r.auroc},
          {"n_samples", r.n_samples},
          {"accuracy_at_round", r.accuracy_at_round}};
}

int cmd_train_clf(const CommonOpts& common, const std::string& features_path,
                  const std::string& labels_path) {
  auto cfg = common.resolve();
  require_input(features_path, "feature file");
  require_input(labels_path, "label file");
  auto out = ensure_out_dir(common.out_dir);

  auto samples = join_samples(load_features(features_path), load_labels(labels_path));
  auto [train, valid] = split_train_valid(samples, cfg.seed);
  FitOptions options{cfg.clf_max_iter, cfg.clf_l2, cfg.clf_tol};
  auto clf = fit(train, options);
  save_classifier(out + "/classifier.json", clf);

  json report = {{"train", report_json(evaluate(clf, train))},
                 {"valid", report_json(evaluate(clf, valid))}};
  save_json_file(out + "/train_report.json", report);
  write_manifest(out, "train-clf", cfg, {features_path, labels_path},
                 {"classifier.json", "train_report.json"});
  return 0;
}

int cmd_eval_clf(const CommonOpts& common, const std::string& clf_path,
                 const std::string& features_path, const std::string& labels_path) {
  auto cfg = common.resolve();
  require_input(clf_path, "classifier file");
  require_input(features_path, "feature file");
  require_input(labels_path, "label file");
  auto out = ensure_out_dir(common.out_dir);

  auto clf = load_classifier(clf_path);
  auto samples = join_samples(load_features(features_path), load_labels(labels_path));
  save_json_file(out + "/eval_report.json", report_json(evaluate(clf, samples)));
  write_manifest(out, "eval-clf", cfg, {clf_path, features_path, labels_path},
                 {"eval_report.json"});
  return 0;
}

int cmd_cross_val(const CommonOpts& common, const std::string& features_path,
                  const std::string& labels_path, const std::string& groups_path) {
  auto cfg = common.resolve();
  require_input(features_path, "feature file");
  require_input(labels_path, "label file");
  require_input(groups_path, "group file");
  auto out = ensure_out_dir(common.out_dir);

  auto samples = join_samples(load_features(features_path), load_labels(labels_path));
  std::map<std::string, std::string> group_of;
  for_each_jsonl(groups_path, [&](const json& j, std::size_t line) {
    std::string where = groups_path + ":" + std::to_string(line);
    group_of[require_field<std::string>(j, "qa_id", where)] =
        require_field<std::string>(j, "group", where);
  });
  std::map<std::string, std::vector<LabeledSample>> groups;
  for (auto& s : samples) {
    auto it = group_of.find(s.qa_id);
    if (it == group_of.end())
      raise(Errc::validation_error, "no group assignment for qa_id '" + s.qa_id + "'");
    groups[it->second].push_back(std::move(s));
  }

  FitOptions options{cfg.clf_max_iter, cfg.clf_l2, cfg.clf_tol};
  auto report = cross_validate_groups(groups, cfg.seed, options);
  save_json_file(out + "/crossval.json",
                 json{{"group_ids", report.group_ids}, {"auroc", report.auroc}});
  write_manifest(out, "cross-val", cfg, {features_path, labels_path, groups_path},
                 {"crossval.json"});
  return 0;
}

int cmd_synth(const CommonOpts& common, const std::string& scenario, int n_questions,
              double feature_sep, double exclusion_fraction) {
  auto cfg = common.resolve();
  auto out = ensure_out_dir(common.out_dir);

  SynthConfig synth;
  synth.seed = cfg.seed;
  synth.n_questions = n_questions;
  synth.k = cfg.k;
  synth.feature_sep = feature_sep;
  synth.exclusion_fraction = exclusion_fraction;
  if (scenario == "exchangeable") synth.scenario = Scenario::exchangeable;
  else if (scenario == "retriever-failure") synth.scenario = Scenario::retriever_failure;
  else if (scenario == "retriever-saturation") synth.scenario = Scenario::retriever_saturation;
  else raise(Errc::usage_error, "unknown scenario '" + scenario + "'");

  auto outputs = emit_synth_files(synth, out);
  write_manifest(out, "synth", cfg, {}, outputs);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Conformal retrieval certification and lookback-ratio factuality scoring"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // ingest
  CommonOpts ingest_opts;
  std::string corpus_path, qa_path;
  auto* ingest = app.add_subcommand("ingest", "chunk a corpus and validate the QA set");
  add_common(ingest, ingest_opts);
  ingest->add_option("--corpus", corpus_path, "corpus jsonl")->required();
  ingest->add_option("--qa", qa_path, "qa jsonl")->required();

  // index
  CommonOpts index_opts;
  std::string index_chunks;
  auto* index = app.add_subcommand("index", "build the BM25 inverted index");
  add_common(index, index_opts);
  index->add_option("--chunks", index_chunks, "chunk store jsonl")->required();

  // calibrate
  CommonOpts cal_opts;
  std::string cal_chunks, cal_qa, cal_scores, cal_index;
  auto* calibrate = app.add_subcommand("calibrate", "fit the conformal model");
  add_common(calibrate, cal_opts);
  calibrate->add_option("--chunks", cal_chunks, "chunk store jsonl")->required();
  calibrate->add_option("--qa", cal_qa, "qa jsonl")->required();
  calibrate->add_option("--scores", cal_scores, "external score jsonl");
  calibrate->add_option("--index", cal_index, "index json (retrieve with BM25 instead)");

  // certify
  CommonOpts cert_opts;
  std::string cert_model, cert_chunks, cert_qa, cert_scores;
  bool cert_filter = false;
  auto* certify = app.add_subcommand("certify", "emit trust labels for retrieval results");
  add_common(certify, cert_opts);
  certify->add_option("--model", cert_model, "conformal model json")->required();
  certify->add_option("--chunks", cert_chunks, "chunk store jsonl")->required();
  certify->add_option("--qa", cert_qa, "qa jsonl")->required();
  certify->add_option("--scores", cert_scores, "external score jsonl")->required();
  certify->add_flag("--filter", cert_filter, "also write retrieval results without untrusted chunks");

  // diagnose
  CommonOpts diag_opts;
  std::string diag_model, diag_chunks, diag_qa, diag_scores, diag_cal_scores, diag_sweep;
  auto* diagnose = app.add_subcommand("diagnose", "m1/m2 diagnostics and coverage audit");
  add_common(diagnose, diag_opts);
  diagnose->add_option("--model", diag_model, "conformal model json")->required();
  diagnose->add_option("--chunks", diag_chunks, "chunk store jsonl")->required();
  diagnose->add_option("--qa", diag_qa, "qa jsonl")->required();
  diagnose->add_option("--scores", diag_scores, "holdout score jsonl")->required();
  diagnose->add_option("--cal-scores", diag_cal_scores, "calibration scores jsonl (for sweeps)");
  diagnose->add_option("--alpha-sweep", diag_sweep, "lo:hi:step table of alpha vs mean m1/m2");

  // lookback
  CommonOpts lb_opts;
  std::string lb_attn;
  bool lb_raw = false, lb_no_normalize = false;
  auto* lookback = app.add_subcommand("lookback", "compute lookback-ratio features");
  add_common(lookback, lb_opts);
  lookback->add_option("--attn", lb_attn, "attention dump jsonl")->required();
  lookback->add_flag("--raw", lb_raw, "input is per-token attention with a segment layout");
  lookback->add_flag("--no-normalize", lb_no_normalize, "skip per-sample min-max scaling");

  // train-clf
  CommonOpts train_opts;
  std::string train_features, train_labels;
  auto* train_clf = app.add_subcommand("train-clf", "train the factuality classifier");
  add_common(train_clf, train_opts);
  train_clf->add_option("--features", train_features, "feature jsonl")->required();
  train_clf->add_option("--labels", train_labels, "gamma_ac label jsonl")->required();

  // eval-clf
  CommonOpts eval_opts;
  std::string eval_clf_path, eval_features, eval_labels;
  auto* eval_clf = app.add_subcommand("eval-clf", "evaluate a trained classifier");
  add_common(eval_clf, eval_opts);
  eval_clf->add_option("--clf", eval_clf_path, "classifier json")->required();
  eval_clf->add_option("--features", eval_features, "feature jsonl")->required();
  eval_clf->add_option("--labels", eval_labels, "gamma_ac label jsonl")->required();

  // cross-val
  CommonOpts cv_opts;
  std::string cv_features, cv_labels, cv_groups;
  auto* cross_val = app.add_subcommand("cross-val", "train/test AUROC matrix across groups");
  add_common(cross_val, cv_opts);
  cross_val->add_option("--features", cv_features, "feature jsonl")->required();
  cross_val->add_option("--labels", cv_labels, "gamma_ac label jsonl")->required();
  cross_val->add_option("--groups", cv_groups, "group assignment jsonl")->required();

  // synth
  CommonOpts synth_opts;
  std::string synth_scenario = "exchangeable";
  int synth_n = 500;
  double synth_sep = 0.0, synth_exclusion = 0.4;
  auto* synth = app.add_subcommand("synth", "generate synthetic pipeline inputs");
  add_common(synth, synth_opts);
  synth->add_option("--scenario", synth_scenario, "exchangeable | retriever-failure | retriever-saturation")
      ->check(CLI::IsMember({"exchangeable", "retriever-failure", "retriever-saturation"}));
  synth->add_option("--n", synth_n, "questions per half");
  synth->add_option("--feature-sep", synth_sep, "class separation of attention signal");
  synth->add_option("--exclusion-fraction", synth_exclusion, "retriever-failure exclusion rate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (ingest->parsed()) return cmd_ingest(ingest_opts, corpus_path, qa_path);
    if (index->parsed()) return cmd_index(index_opts, index_chunks);
    if (calibrate->parsed())
      return cmd_calibrate(cal_opts, cal_chunks, cal_qa, cal_scores, cal_index);
    if (certify->parsed())
      return cmd_certify(cert_opts, cert_model, cert_chunks, cert_qa, cert_scores, cert_filter);
    if (diagnose->parsed())
      return cmd_diagnose(diag_opts, diag_model, diag_chunks, diag_qa, diag_scores,
                          diag_cal_scores, diag_sweep);
    if (lookback->parsed()) return cmd_lookback(lb_opts, lb_attn, lb_raw, lb_no_normalize);
    if (train_clf->parsed()) return cmd_train_clf(train_opts, train_features, train_labels);
    if (eval_clf->parsed())
      return cmd_eval_clf(eval_opts, eval_clf_path, eval_features, eval_labels);
    if (cross_val->parsed()) return cmd_cross_val(cv_opts, cv_features, cv_labels, cv_groups);
    if (synth->parsed())
      return cmd_synth(synth_opts, synth_scenario, synth_n, synth_sep, synth_exclusion);
  } catch (const RagError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return exit_code(Errc::internal_error);
  }
  return exit_code(Errc::usage_error);
}

}  // namespace ragcert
