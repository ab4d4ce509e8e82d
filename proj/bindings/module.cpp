#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ragcert/classifier.hpp"
#include "ragcert/config.hpp"
#include "ragcert/conformal.hpp"
#include "ragcert/corpus.hpp"
#include "ragcert/error.hpp"
#include "ragcert/lookback.hpp"
#include "ragcert/retrieval.hpp"
#include "ragcert/similarity.hpp"
#include "ragcert/synth.hpp"
#include "ragcert/text.hpp"
#include "ragcert/version.hpp"

namespace py = pybind11;

using namespace ragcert;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Conformal retrieval certification and lookback-ratio factuality scoring";
  m.attr("__version__") = kVersion;

  py::register_exception<RagError>(m, "RagError");

  // ---- corpus ----
  py::class_<Document>(m, "Document")
      .def(py::init<std::string, std::string>(), py::arg("doc_id"), py::arg("text"))
      .def_readwrite("doc_id", &Document::doc_id)
      .def_readwrite("text", &Document::text);

  py::class_<Chunk>(m, "Chunk")
      .def(py::init<std::string, std::string, std::string, int>(), py::arg("chunk_id"),
           py::arg("doc_id"), py::arg("text"), py::arg("token_count"))
      .def_readwrite("chunk_id", &Chunk::chunk_id)
      .def_readwrite("doc_id", &Chunk::doc_id)
      .def_readwrite("text", &Chunk::text)
      .def_readwrite("token_count", &Chunk::token_count);

  py::class_<QaRecord>(m, "QaRecord")
      .def(py::init<std::string, std::string, std::string, std::string>(), py::arg("qa_id"),
           py::arg("question"), py::arg("reference_answer"), py::arg("gold_doc_id"))
      .def_readwrite("qa_id", &QaRecord::qa_id)
      .def_readwrite("question", &QaRecord::question)
      .def_readwrite("reference_answer", &QaRecord::reference_answer)
      .def_readwrite("gold_doc_id", &QaRecord::gold_doc_id);

  py::class_<ChunkStore>(m, "ChunkStore")
      .def_static("build", &ChunkStore::build, py::arg("chunks"))
      .def("chunks", &ChunkStore::chunks)
      .def("has_doc", &ChunkStore::has_doc, py::arg("doc_id"));

  m.def("whitespace_tokens",
        [](const std::string& text) { return whitespace_tokens(text); }, py::arg("text"));
  m.def("chunk_document", &chunk_document, py::arg("doc"), py::arg("chunk_size"));
  m.def("load_corpus", &load_corpus, py::arg("path"));
  m.def("load_qa_dataset", &load_qa_dataset, py::arg("path"));
  m.def("load_chunks", &load_chunks, py::arg("path"));
  m.def("save_chunks", &save_chunks, py::arg("path"), py::arg("chunks"));

  // ---- similarity ----
  py::enum_<RougeStat>(m, "RougeStat")
      .value("f1", RougeStat::f1)
      .value("precision", RougeStat::precision)
      .value("recall", RougeStat::recall);

  py::class_<RougeScore>(m, "RougeScore")
      .def_readonly("precision", &RougeScore::precision)
      .def_readonly("recall", &RougeScore::recall)
      .def_readonly("f1", &RougeScore::f1);

  m.def("rouge_l",
        [](const std::string& candidate, const std::string& reference) {
          return rouge_l(candidate, reference);
        },
        py::arg("candidate"), py::arg("reference"));

  // ---- retrieval ----
  py::class_<Bm25Params>(m, "Bm25Params")
      .def(py::init<>())
      .def(py::init<double, double>(), py::arg("k1"), py::arg("b"))
      .def_readwrite("k1", &Bm25Params::k1)
      .def_readwrite("b", &Bm25Params::b);

  py::class_<ScoredChunk>(m, "ScoredChunk")
      .def(py::init<std::string, std::string, double, std::optional<double>>(),
           py::arg("chunk_id"), py::arg("doc_id"), py::arg("raw_score"),
           py::arg("norm_score") = std::nullopt)
      .def_readwrite("chunk_id", &ScoredChunk::chunk_id)
      .def_readwrite("doc_id", &ScoredChunk::doc_id)
      .def_readwrite("raw_score", &ScoredChunk::raw_score)
      .def_readwrite("norm_score", &ScoredChunk::norm_score);

  py::class_<RetrievalResult>(m, "RetrievalResult")
      .def(py::init<std::string, std::vector<ScoredChunk>>(), py::arg("qa_id"),
           py::arg("candidates"))
      .def_readwrite("qa_id", &RetrievalResult::qa_id)
      .def_readwrite("candidates", &RetrievalResult::candidates);

  py::class_<InvertedIndex>(m, "InvertedIndex")
      .def_static("build", &InvertedIndex::build, py::arg("chunks"))
      .def("score", &InvertedIndex::score, py::arg("query"), py::arg("chunk_id"),
           py::arg("params") = Bm25Params{})
      .def("retrieve_top_k", &InvertedIndex::retrieve_top_k, py::arg("qa_id"),
           py::arg("question"), py::arg("k"), py::arg("params") = Bm25Params{})
      .def("corpus_size", &InvertedIndex::corpus_size)
      .def("avg_chunk_len", &InvertedIndex::avg_chunk_len)
      .def("posting_count", &InvertedIndex::posting_count, py::arg("term"));

  m.def("sort_candidates",
        [](std::vector<ScoredChunk> candidates) {
          sort_candidates(candidates);
          return candidates;
        },
        py::arg("candidates"));
  m.def("load_external_scores", &load_external_scores, py::arg("path"), py::arg("k_max"),
        py::arg("store"), py::arg("qa"));

  // ---- conformal ----
  py::enum_<DeltaFormula>(m, "DeltaFormula")
      .value("standard_adjusted", DeltaFormula::standard_adjusted)
      .value("literal", DeltaFormula::literal);

  py::class_<CalibrationEntry>(m, "CalibrationEntry")
      .def(py::init([](std::string qa_id, int rank, double raw_score, double h_score,
                       bool affiliation_correct, std::optional<double> norm_score) {
             CalibrationEntry e;
             e.qa_id = std::move(qa_id);
             e.rank = rank;
             e.raw_score = raw_score;
             e.h_score = h_score;
             e.affiliation_correct = affiliation_correct;
             e.norm_score = norm_score;
             return e;
           }),
           py::arg("qa_id"), py::arg("rank"), py::arg("raw_score"), py::arg("h_score"),
           py::arg("affiliation_correct"), py::arg("norm_score") = std::nullopt)
      .def_readwrite("qa_id", &CalibrationEntry::qa_id)
      .def_readwrite("rank", &CalibrationEntry::rank)
      .def_readwrite("raw_score", &CalibrationEntry::raw_score)
      .def_readwrite("norm_score", &CalibrationEntry::norm_score)
      .def_readwrite("h_score", &CalibrationEntry::h_score)
      .def_readwrite("affiliation_correct", &CalibrationEntry::affiliation_correct);

  py::class_<CalibrationScores>(m, "CalibrationScores")
      .def(py::init<>())
      .def(py::init([](std::vector<CalibrationEntry> entries, int n_cal) {
             return CalibrationScores{std::move(entries), n_cal};
           }),
           py::arg("entries"), py::arg("n_cal"))
      .def_readwrite("entries", &CalibrationScores::entries)
      .def_readwrite("n_cal", &CalibrationScores::n_cal);

  py::class_<ConformalModel>(m, "ConformalModel")
      .def(py::init<>())
      .def_readwrite("n1", &ConformalModel::n1)
      .def_readwrite("n2", &ConformalModel::n2)
      .def_readwrite("s_thres", &ConformalModel::s_thres)
      .def_readwrite("q_hat", &ConformalModel::q_hat)
      .def_readwrite("alpha", &ConformalModel::alpha)
      .def_readwrite("beta", &ConformalModel::beta)
      .def_readwrite("k", &ConformalModel::k)
      .def_readwrite("n_correct", &ConformalModel::n_correct);

  py::class_<TrustLabels>(m, "TrustLabels")
      .def_readonly("qa_id", &TrustLabels::qa_id)
      .def_readonly("labels", &TrustLabels::labels)
      .def_readonly("k_trusted", &TrustLabels::k_trusted)
      .def_readonly("m1", &TrustLabels::m1)
      .def_readonly("m2", &TrustLabels::m2);

  py::class_<DiagnosticsReport>(m, "DiagnosticsReport")
      .def_readonly("n_questions", &DiagnosticsReport::n_questions)
      .def_readonly("alpha", &DiagnosticsReport::alpha)
      .def_readonly("mean_m1", &DiagnosticsReport::mean_m1)
      .def_readonly("se_m1", &DiagnosticsReport::se_m1)
      .def_readonly("mean_m2", &DiagnosticsReport::mean_m2)
      .def_readonly("se_m2", &DiagnosticsReport::se_m2)
      .def_readonly("deviation", &DiagnosticsReport::deviation);

  py::class_<SweepRow>(m, "SweepRow")
      .def_readonly("alpha", &SweepRow::alpha)
      .def_readonly("mean_m1", &SweepRow::mean_m1)
      .def_readonly("mean_m2", &SweepRow::mean_m2);

  py::class_<CalibrationResult>(m, "CalibrationResult")
      .def_readonly("model", &CalibrationResult::model)
      .def_readonly("labels", &CalibrationResult::labels);

  m.def("percentile_higher", &percentile_higher, py::arg("values"), py::arg("p"));
  m.def("adjusted_level", &adjusted_level, py::arg("n"), py::arg("alpha"),
        py::arg("formula") = DeltaFormula::standard_adjusted);
  m.def("build_calibration_scores", &build_calibration_scores, py::arg("results"),
        py::arg("store"), py::arg("qa"), py::arg("stat") = RougeStat::f1);
  m.def("normalize_scores", &normalize_scores, py::arg("scores"));
  m.def("normalize_with", &normalize_with, py::arg("scores"), py::arg("model"));
  m.def("compute_s_thres", &compute_s_thres, py::arg("scores"), py::arg("beta"));
  m.def("label_calibration", &label_calibration, py::arg("scores"), py::arg("s_thres"));
  m.def("compute_q_hat", &compute_q_hat, py::arg("scores"), py::arg("labels"), py::arg("alpha"),
        py::arg("formula") = DeltaFormula::standard_adjusted);
  m.def("calibrate", &calibrate, py::arg("scores"), py::arg("alpha"), py::arg("beta"),
        py::arg("k"), py::arg("formula") = DeltaFormula::standard_adjusted);
  m.def("predict_trust", &predict_trust, py::arg("model"), py::arg("result"));
  m.def("filter_chunks", &filter_chunks, py::arg("result"), py::arg("labels"));
  m.def("aggregate_diagnostics", &aggregate_diagnostics, py::arg("all_labels"), py::arg("alpha"));
  m.def("coverage_audit", &coverage_audit, py::arg("model"), py::arg("holdout"));
  m.def("alpha_sweep", &alpha_sweep, py::arg("calibration"), py::arg("labels"),
        py::arg("evaluation"), py::arg("k"), py::arg("alphas"),
        py::arg("formula") = DeltaFormula::standard_adjusted);
  m.def("save_model", &save_model, py::arg("path"), py::arg("model"));
  m.def("load_model", &load_model, py::arg("path"));

  // ---- lookback ----
  py::enum_<FeatureMode>(m, "FeatureMode")
      .value("cw", FeatureMode::cw)
      .value("fc", FeatureMode::fc);

  py::enum_<ContextDenominator>(m, "ContextDenominator")
      .value("include_pre_qu", ContextDenominator::include_pre_qu)
      .value("chunks_only", ContextDenominator::chunks_only);

  py::class_<Segment>(m, "Segment")
      .def(py::init<std::string, int>(), py::arg("name"), py::arg("n_tokens"))
      .def_readwrite("name", &Segment::name)
      .def_readwrite("n_tokens", &Segment::n_tokens);

  py::class_<AttentionDump>(m, "AttentionDump")
      .def(py::init([](std::string qa_id, int layers, int heads, int steps,
                       std::vector<Segment> segments, std::vector<double> a) {
             AttentionDump d;
             d.qa_id = std::move(qa_id);
             d.layers = layers;
             d.heads = heads;
             d.steps = steps;
             d.segments = std::move(segments);
             d.a = std::move(a);
             d.validate();
             return d;
           }),
           py::arg("qa_id"), py::arg("layers"), py::arg("heads"), py::arg("steps"),
           py::arg("segments"), py::arg("a"))
      .def_readonly("qa_id", &AttentionDump::qa_id)
      .def_readonly("layers", &AttentionDump::layers)
      .def_readonly("heads", &AttentionDump::heads)
      .def_readonly("steps", &AttentionDump::steps)
      .def_readonly("segments", &AttentionDump::segments)
      .def_readonly("a", &AttentionDump::a)
      .def("at", &AttentionDump::at, py::arg("l"), py::arg("h"), py::arg("t"), py::arg("s"))
      .def("chunk_count", &AttentionDump::chunk_count);

  py::class_<SegmentRange>(m, "SegmentRange")
      .def(py::init<std::string, int, int>(), py::arg("name"), py::arg("start"),
           py::arg("length"))
      .def_readwrite("name", &SegmentRange::name)
      .def_readwrite("start", &SegmentRange::start)
      .def_readwrite("length", &SegmentRange::length);

  py::class_<RawAttention>(m, "RawAttention")
      .def(py::init([](std::string qa_id, int layers, int heads, int steps, int prompt_tokens,
                       std::vector<SegmentRange> layout, std::vector<double> a) {
             RawAttention r;
             r.qa_id = std::move(qa_id);
             r.layers = layers;
             r.heads = heads;
             r.steps = steps;
             r.prompt_tokens = prompt_tokens;
             r.layout = std::move(layout);
             r.a = std::move(a);
             return r;
           }),
           py::arg("qa_id"), py::arg("layers"), py::arg("heads"), py::arg("steps"),
           py::arg("prompt_tokens"), py::arg("layout"), py::arg("a"))
      .def_readwrite("qa_id", &RawAttention::qa_id);

  py::class_<ContextAggregate>(m, "ContextAggregate")
      .def_readonly("layers", &ContextAggregate::layers)
      .def_readonly("heads", &ContextAggregate::heads)
      .def_readonly("steps", &ContextAggregate::steps)
      .def_readonly("context", &ContextAggregate::context)
      .def_readonly("output", &ContextAggregate::output);

  py::class_<LookbackFeatures>(m, "LookbackFeatures")
      .def(py::init<>())
      .def_readwrite("qa_id", &LookbackFeatures::qa_id)
      .def_readwrite("mode", &LookbackFeatures::mode)
      .def_readwrite("vec", &LookbackFeatures::vec)
      .def_readwrite("k_present", &LookbackFeatures::k_present)
      .def_readwrite("layers", &LookbackFeatures::layers)
      .def_readwrite("heads", &LookbackFeatures::heads)
      .def_readwrite("slots", &LookbackFeatures::slots);

  m.def("segment_average", &segment_average, py::arg("raw"));
  m.def("context_aggregate", &context_aggregate, py::arg("dump"),
        py::arg("mode") = ContextDenominator::include_pre_qu);
  m.def("lookback_ratios_cw", &lookback_ratios_cw, py::arg("dump"), py::arg("k"),
        py::arg("mode") = ContextDenominator::include_pre_qu);
  m.def("lookback_ratios_fc", &lookback_ratios_fc, py::arg("dump"));
  m.def("normalize_features", &normalize_features, py::arg("features"));
  m.def("load_attention_dumps", &load_attention_dumps, py::arg("path"));
  m.def("save_attention_dumps", &save_attention_dumps, py::arg("path"), py::arg("dumps"));
  m.def("load_features", &load_features, py::arg("path"));
  m.def("save_features", &save_features, py::arg("path"), py::arg("features"));

  // ---- classifier ----
  py::class_<LabeledSample>(m, "LabeledSample")
      .def(py::init([](std::string qa_id, LookbackFeatures features, int gamma_ac) {
             return LabeledSample{std::move(qa_id), std::move(features), gamma_ac};
           }),
           py::arg("qa_id"), py::arg("features"), py::arg("gamma_ac"))
      .def_readwrite("qa_id", &LabeledSample::qa_id)
      .def_readwrite("features", &LabeledSample::features)
      .def_readwrite("gamma_ac", &LabeledSample::gamma_ac);

  py::class_<FactualityClassifier>(m, "FactualityClassifier")
      .def(py::init<>())
      .def_readwrite("weights", &FactualityClassifier::weights)
      .def_readwrite("bias", &FactualityClassifier::bias)
      .def_readwrite("mode", &FactualityClassifier::mode)
      .def_readwrite("layers", &FactualityClassifier::layers)
      .def_readwrite("heads", &FactualityClassifier::heads)
      .def_readwrite("slots", &FactualityClassifier::slots)
      .def_readwrite("trained_on", &FactualityClassifier::trained_on);

  py::class_<FitOptions>(m, "FitOptions")
      .def(py::init<>())
      .def(py::init([](int max_iter, double l2_strength, double tol) {
             return FitOptions{max_iter, l2_strength, tol};
           }),
           py::arg("max_iter") = 1000, py::arg("l2_strength") = 1.0, py::arg("tol") = 1e-6)
      .def_readwrite("max_iter", &FitOptions::max_iter)
      .def_readwrite("l2_strength", &FitOptions::l2_strength)
      .def_readwrite("tol", &FitOptions::tol);

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("auroc", &EvalReport::auroc)
      .def_readonly("n_samples", &EvalReport::n_samples)
      .def_readonly("accuracy_at_round", &EvalReport::accuracy_at_round);

  py::class_<CrossValReport>(m, "CrossValReport")
      .def_readonly("group_ids", &CrossValReport::group_ids)
      .def_readonly("auroc", &CrossValReport::auroc);

  m.def("split_train_valid", &split_train_valid, py::arg("samples"), py::arg("seed"));
  m.def("fit", &fit, py::arg("train"), py::arg("options") = FitOptions{});
  m.def("predict_factuality", &predict_factuality, py::arg("clf"), py::arg("features"));
  m.def("auroc", &auroc, py::arg("scores"), py::arg("labels"));
  m.def("evaluate", &evaluate, py::arg("clf"), py::arg("samples"));
  m.def("cross_validate_groups", &cross_validate_groups, py::arg("groups"), py::arg("seed"),
        py::arg("options") = FitOptions{});
  m.def("save_classifier", &save_classifier, py::arg("path"), py::arg("clf"));
  m.def("load_classifier", &load_classifier, py::arg("path"));
  m.def("load_labels", &load_labels, py::arg("path"));
  m.def("join_samples", &join_samples, py::arg("features"), py::arg("labels"));

  // ---- synth ----
  py::enum_<Scenario>(m, "Scenario")
      .value("exchangeable", Scenario::exchangeable)
      .value("retriever_failure", Scenario::retriever_failure)
      .value("retriever_saturation", Scenario::retriever_saturation);

  py::enum_<ScoreDist::Family>(m, "ScoreFamily")
      .value("uniform", ScoreDist::Family::uniform)
      .value("gaussian_clamped", ScoreDist::Family::gaussian_clamped);

  py::class_<ScoreDist>(m, "ScoreDist")
      .def(py::init<>())
      .def(py::init([](ScoreDist::Family family, double a, double b) {
             return ScoreDist{family, a, b};
           }),
           py::arg("family"), py::arg("a"), py::arg("b"))
      .def_readwrite("family", &ScoreDist::family)
      .def_readwrite("a", &ScoreDist::a)
      .def_readwrite("b", &ScoreDist::b);

  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("seed", &SynthConfig::seed)
      .def_readwrite("n_questions", &SynthConfig::n_questions)
      .def_readwrite("k", &SynthConfig::k)
      .def_readwrite("scenario", &SynthConfig::scenario)
      .def_readwrite("correct_score_dist", &SynthConfig::correct_score_dist)
      .def_readwrite("incorrect_score_dist", &SynthConfig::incorrect_score_dist)
      .def_readwrite("correct_per_question", &SynthConfig::correct_per_question)
      .def_readwrite("exclusion_fraction", &SynthConfig::exclusion_fraction)
      .def_readwrite("saturation_jitter", &SynthConfig::saturation_jitter)
      .def_readwrite("feature_sep", &SynthConfig::feature_sep)
      .def_readwrite("n_samples", &SynthConfig::n_samples)
      .def_readwrite("layers", &SynthConfig::layers)
      .def_readwrite("heads", &SynthConfig::heads);

  py::class_<RetrievalScenario>(m, "RetrievalScenario")
      .def_readonly("calibration", &RetrievalScenario::calibration)
      .def_readonly("holdout", &RetrievalScenario::holdout);

  m.def("gen_retrieval_scenario", &gen_retrieval_scenario, py::arg("config"));
  m.def("gen_lookback_dataset", &gen_lookback_dataset, py::arg("config"));
  m.def("emit_synth_files", &emit_synth_files, py::arg("config"), py::arg("out_dir"));
}
