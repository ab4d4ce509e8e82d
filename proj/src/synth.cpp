#include "ragcert/synth.hpp"

#include <algorithm>

#include <json.hpp>

#include "ragcert/error.hpp"
#include "ragcert/io.hpp"
#include "ragcert/rng.hpp"
#include "ragcert/text.hpp"

namespace ragcert {

using nlohmann::json;

namespace {

// Substream ids; one master seed drives everything.
enum Stream : std::uint64_t {
  stream_cal = 0,
  stream_test = 1,
  stream_attention = 2,
  stream_labels = 3,
  stream_features = 4,
};

constexpr int answer_tokens = 4;

std::string answer_text(int i) {
  std::string tag = std::to_string(i);
  return "ansa" + tag + " ansb" + tag + " ansc" + tag + " ansd" + tag;
}

std::string junk_text(int p) {
  std::string tag = std::to_string(p);
  return "junka" + tag + " junkb" + tag + " junkc" + tag + " junkd" + tag;
}

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

}  // namespace

double draw_score(const ScoreDist& dist, Rng& rng) {
  double x = dist.family == ScoreDist::Family::uniform ? rng.uniform(dist.a, dist.b)
                                                       : rng.gaussian(dist.a, dist.b);
  return clamp01(x);
}

SynthRetrievalData gen_retrieval_data(const SynthConfig& cfg) {
  if (cfg.n_questions < 1 || cfg.k < 1)
    raise(Errc::usage_error, "synth config needs n_questions >= 1 and K >= 1");
  if (cfg.correct_per_question < 1 || cfg.correct_per_question > cfg.k)
    raise(Errc::usage_error, "correct_per_question must lie in [1, K]");

  SynthRetrievalData data;
  const int n = cfg.n_questions;
  const int total_questions = 2 * n;  // calibration half then holdout half
  const int gold_chunks =
      cfg.scenario == Scenario::retriever_saturation ? cfg.k : cfg.correct_per_question;
  const int pool_size = cfg.k + 6;

  // Filler documents shared across questions; one chunk each, vocabulary
  // disjoint from every answer so h comes out exactly 0.
  for (int p = 0; p < pool_size; ++p) {
    Document d{"j" + zero_pad(p, 4), junk_text(p)};
    auto chunks = chunk_document(d, answer_tokens);
    data.docs.push_back(d);
    data.chunks.insert(data.chunks.end(), chunks.begin(), chunks.end());
  }

  for (int i = 0; i < total_questions; ++i) {
    std::string answer = answer_text(i);
    Document gold{"d" + zero_pad(static_cast<std::size_t>(i), 5), ""};
    for (int c = 0; c < gold_chunks; ++c) {
      if (c > 0) gold.text += ' ';
      gold.text += answer;
    }
    auto chunks = chunk_document(gold, answer_tokens);
    data.docs.push_back(gold);
    data.chunks.insert(data.chunks.end(), chunks.begin(), chunks.end());

    QaRecord qa;
    qa.qa_id = "q" + zero_pad(static_cast<std::size_t>(i), 5);
    qa.question = "where is ansa" + std::to_string(i) + " explained";
    qa.reference_answer = answer;
    qa.gold_doc_id = gold.doc_id;
    data.qa.push_back(std::move(qa));
  }

  auto gen_half = [&](int first_question, Rng rng) {
    std::vector<RetrievalResult> results;
    results.reserve(n);
    for (int i = first_question; i < first_question + n; ++i) {
      const QaRecord& qa = data.qa[static_cast<std::size_t>(i)];
      RetrievalResult result;
      result.qa_id = qa.qa_id;

      int correct = cfg.correct_per_question;
      switch (cfg.scenario) {
        case Scenario::exchangeable:
          break;
        case Scenario::retriever_failure:
          if (rng.uniform01() < cfg.exclusion_fraction) correct = 0;
          break;
        case Scenario::retriever_saturation:
          correct = cfg.k;
          break;
      }

      if (cfg.scenario == Scenario::retriever_saturation) {
        double base = draw_score(cfg.correct_score_dist, rng);
        for (int c = 0; c < cfg.k; ++c) {
          std::string chunk_id = qa.gold_doc_id + "#" + zero_pad(static_cast<std::size_t>(c), 4);
          double score = clamp01(base + cfg.saturation_jitter * rng.gaussian());
          result.candidates.push_back({chunk_id, qa.gold_doc_id, score, std::nullopt});
        }
      } else {
        for (int c = 0; c < correct; ++c) {
          std::string chunk_id = qa.gold_doc_id + "#" + zero_pad(static_cast<std::size_t>(c), 4);
          result.candidates.push_back(
              {chunk_id, qa.gold_doc_id, draw_score(cfg.correct_score_dist, rng), std::nullopt});
        }
        // Distinct filler chunks for the rest of the top-K.
        std::vector<int> pool(pool_size);
        for (int p = 0; p < pool_size; ++p) pool[p] = p;
        rng.shuffle(pool);
        for (int c = 0; c < cfg.k - correct; ++c) {
          int p = pool[static_cast<std::size_t>(c)];
          std::string doc_id = "j" + zero_pad(p, 4);
          result.candidates.push_back({doc_id + "#0000", doc_id,
                                       draw_score(cfg.incorrect_score_dist, rng), std::nullopt});
        }
      }
      sort_candidates(result.candidates);
      results.push_back(std::move(result));
    }
    return results;
  };

  data.cal_results = gen_half(0, Rng::stream(cfg.seed, stream_cal));
  data.test_results = gen_half(n, Rng::stream(cfg.seed, stream_test));
  return data;
}

RetrievalScenario gen_retrieval_scenario(const SynthConfig& cfg) {
  auto data = gen_retrieval_data(cfg);
  auto store = ChunkStore::build(std::move(data.chunks));
  RetrievalScenario scenario;
  scenario.calibration = build_calibration_scores(data.cal_results, store, data.qa);
  scenario.holdout = build_calibration_scores(data.test_results, store, data.qa);
  return scenario;
}

std::vector<LabeledSample> gen_lookback_dataset(const SynthConfig& cfg) {
  if (cfg.feature_sep < 0.0) raise(Errc::usage_error, "feature_sep must be >= 0");
  if (cfg.n_samples < 2 || cfg.layers < 1 || cfg.heads < 1 || cfg.k < 1)
    raise(Errc::usage_error, "lookback dataset needs n_samples >= 2 and positive dimensions");

  Rng rng = Rng::stream(cfg.seed, stream_features);
  const std::size_t blocks = static_cast<std::size_t>(cfg.layers) * cfg.heads;
  const std::size_t dim = blocks * static_cast<std::size_t>(cfg.k);

  std::vector<LabeledSample> samples;
  samples.reserve(cfg.n_samples);
  for (int i = 0; i < cfg.n_samples; ++i) {
    LabeledSample s;
    s.qa_id = "s" + zero_pad(static_cast<std::size_t>(i), 5);
    s.gamma_ac = i % 2;  // balanced labels
    s.features.qa_id = s.qa_id;
    s.features.mode = FeatureMode::cw;
    s.features.k_present = cfg.k;
    s.features.layers = cfg.layers;
    s.features.heads = cfg.heads;
    s.features.slots = cfg.k;
    s.features.vec.resize(dim);
    for (double& v : s.features.vec) v = rng.gaussian();
    if (s.gamma_ac == 1)
      for (std::size_t b = 0; b < blocks; ++b)
        s.features.vec[b * static_cast<std::size_t>(cfg.k)] += cfg.feature_sep;
    samples.push_back(std::move(s));
  }
  return samples;
}

SynthAttentionData gen_attention_data(const SynthConfig& cfg, const std::vector<QaRecord>& qa) {
  Rng attn_rng = Rng::stream(cfg.seed, stream_attention);
  Rng label_rng = Rng::stream(cfg.seed, stream_labels);

  SynthAttentionData data;
  const int steps = 3;
  for (std::size_t i = 0; i < qa.size(); ++i) {
    double gamma = label_rng.uniform01() < 0.5 ? 0.0 : 1.0;
    data.gamma_labels.emplace_back(qa[i].qa_id, gamma);
    data.groups.emplace_back(qa[i].qa_id, i % 2 == 0 ? "g0" : "g1");

    AttentionDump dump;
    dump.qa_id = qa[i].qa_id;
    dump.layers = cfg.layers;
    dump.heads = cfg.heads;
    dump.steps = steps;
    int k_present = 1 + static_cast<int>(i % static_cast<std::size_t>(cfg.k));
    dump.segments.push_back({"pre", 4});
    for (int c = 0; c < k_present; ++c)
      dump.segments.push_back({"c_" + std::to_string(c + 1), 8});
    dump.segments.push_back({"qu", 3});
    dump.segments.push_back({"output", 5});

    double chunk_boost = 1.0 + 0.25 * cfg.feature_sep * gamma;
    dump.a.reserve(static_cast<std::size_t>(cfg.layers) * cfg.heads * steps *
                   dump.segments.size());
    for (int l = 0; l < cfg.layers; ++l)
      for (int h = 0; h < cfg.heads; ++h)
        for (int t = 0; t < steps; ++t)
          for (const auto& seg : dump.segments) {
            double v = attn_rng.uniform(0.05, 0.15);
            if (segment_kind(seg.name) == SegmentKind::chunk) v *= chunk_boost;
            dump.a.push_back(v);
          }
    data.dumps.push_back(std::move(dump));
  }
  return data;
}

std::vector<std::string> emit_synth_files(const SynthConfig& cfg, const std::string& out_dir) {
  auto data = gen_retrieval_data(cfg);
  auto attention = gen_attention_data(cfg, data.qa);

  auto path = [&](const std::string& name) { return out_dir + "/" + name; };

  std::vector<json> corpus_lines;
  for (const auto& d : data.docs)
    corpus_lines.push_back({{"doc_id", d.doc_id}, {"text", d.text}});
  write_jsonl(path("corpus.jsonl"), corpus_lines);

  save_chunks(path("chunks.jsonl"), data.chunks);

  std::vector<json> qa_lines;
  for (const auto& r : data.qa)
    qa_lines.push_back({{"qa_id", r.qa_id},
                        {"question", r.question},
                        {"reference_answer", r.reference_answer},
                        {"gold_doc_id", r.gold_doc_id}});
  write_jsonl(path("qa.jsonl"), qa_lines);

  save_scores(path("scores_cal.jsonl"), data.cal_results);
  save_scores(path("scores_test.jsonl"), data.test_results);
  save_attention_dumps(path("attn.jsonl"), attention.dumps);

  std::vector<json> label_lines;
  for (const auto& [qa_id, gamma] : attention.gamma_labels)
    label_lines.push_back({{"qa_id", qa_id}, {"gamma_ac", gamma}});
  write_jsonl(path("labels.jsonl"), label_lines);

  std::vector<json> group_lines;
  for (const auto& [qa_id, group] : attention.groups)
    group_lines.push_back({{"qa_id", qa_id}, {"group", group}});
  write_jsonl(path("groups.jsonl"), group_lines);

  return {"corpus.jsonl", "chunks.jsonl",     "qa.jsonl",   "scores_cal.jsonl",
          "scores_test.jsonl", "attn.jsonl", "labels.jsonl", "groups.jsonl"};
}

}  // namespace ragcert
