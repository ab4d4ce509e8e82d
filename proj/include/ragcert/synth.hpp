#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ragcert/classifier.hpp"
#include "ragcert/conformal.hpp"
#include "ragcert/corpus.hpp"
#include "ragcert/lookback.hpp"
#include "ragcert/retrieval.hpp"
#include "ragcert/rng.hpp"

namespace ragcert {

struct ScoreDist {
  enum class Family { uniform, gaussian_clamped };
  Family family = Family::gaussian_clamped;
  double a = 0.0;  // low (uniform) or mean (gaussian)
  double b = 1.0;  // high (uniform) or sigma (gaussian)
};

enum class Scenario { exchangeable, retriever_failure, retriever_saturation };

struct SynthConfig {
  std::uint64_t seed = 0;
  int n_questions = 500;  // per half (calibration and holdout)
  int k = 10;
  Scenario scenario = Scenario::exchangeable;
  ScoreDist correct_score_dist{ScoreDist::Family::gaussian_clamped, 0.75, 0.12};
  ScoreDist incorrect_score_dist{ScoreDist::Family::gaussian_clamped, 0.25, 0.08};
  int correct_per_question = 1;      // exchangeable / non-excluded questions
  double exclusion_fraction = 0.4;   // retriever_failure: questions with no correct chunk
  double saturation_jitter = 5e-4;   // retriever_saturation: within-question score spread

  // Lookback feature dataset.
  double feature_sep = 0.0;  // class mean separation on the informative coordinates
  int n_samples = 200;
  int layers = 2;
  int heads = 2;
};

double draw_score(const ScoreDist& dist, Rng& rng);

// The full synthetic world: documents whose chunks make the ground truth come
// out exactly (correct chunks equal the reference answer, fillers share no
// vocabulary with it), plus per-question candidate scores for a calibration
// half and a holdout half.
struct SynthRetrievalData {
  std::vector<Document> docs;
  std::vector<Chunk> chunks;
  std::vector<QaRecord> qa;
  std::vector<RetrievalResult> cal_results;
  std::vector<RetrievalResult> test_results;
};

SynthRetrievalData gen_retrieval_data(const SynthConfig& cfg);

struct RetrievalScenario {
  CalibrationScores calibration;
  CalibrationScores holdout;
};

// gen_retrieval_data joined with ground truth through the same path the file
// pipeline uses.
RetrievalScenario gen_retrieval_scenario(const SynthConfig& cfg);

// Class-conditional Gaussian lookback features (cw layout, balanced labels);
// the informative coordinates are the first chunk slot of every (l, h) block.
std::vector<LabeledSample> gen_lookback_dataset(const SynthConfig& cfg);

// Attention dumps and gamma_ac labels for every synthetic question; dumps for
// label-1 questions put extra mass on the chunk segments proportional to
// feature_sep.
struct SynthAttentionData {
  std::vector<AttentionDump> dumps;
  std::vector<std::pair<std::string, double>> gamma_labels;  // (qa_id, gamma_ac)
  std::vector<std::pair<std::string, std::string>> groups;   // (qa_id, group_id)
};

SynthAttentionData gen_attention_data(const SynthConfig& cfg, const std::vector<QaRecord>& qa);

// Writes every pipeline ingestion file to out_dir; returns the file names.
std::vector<std::string> emit_synth_files(const SynthConfig& cfg, const std::string& out_dir);

}  // namespace ragcert
