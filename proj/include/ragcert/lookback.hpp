#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace ragcert {

enum class SegmentKind { pre, chunk, qu, output };

struct Segment {
  std::string name;  // "pre", "c_<i>", "qu", "output"
  int n_tokens = 0;
};

SegmentKind segment_kind(const std::string& name);

// Per-sample attention tensor already averaged within each prompt segment:
// a[l][h][t][segment] = mean attention generated token t pays to that segment
// at layer l, head h. Row-major over (l, h, t, segment).
struct AttentionDump {
  std::string qa_id;
  int layers = 0;   // L
  int heads = 0;    // H
  int steps = 0;    // T, generated tokens
  std::vector<Segment> segments;
  std::vector<double> a;

  double at(int l, int h, int t, int s) const {
    return a[((static_cast<std::size_t>(l) * heads + h) * steps + t) * segments.size() + s];
  }
  int chunk_count() const;

  // Enforces shape and segment invariants; raises on violation.
  void validate() const;
};

// Per-token attention with an explicit segment layout, for small T*P dumps.
struct SegmentRange {
  std::string name;
  int start = 0;  // first prompt token index
  int length = 0;
};

struct RawAttention {
  std::string qa_id;
  int layers = 0;
  int heads = 0;
  int steps = 0;
  int prompt_tokens = 0;  // P
  std::vector<SegmentRange> layout;
  std::vector<double> a;  // row-major over (l, h, t, p)
};

// Means per segment. Layout ranges must partition [0, P) in order with
// length >= 1 each; otherwise raises BadLayout.
AttentionDump segment_average(const RawAttention& raw);

enum class FeatureMode { cw, fc };
enum class ContextDenominator { include_pre_qu, chunks_only };

struct LookbackFeatures {
  std::string qa_id;
  FeatureMode mode = FeatureMode::cw;
  std::vector<double> vec;  // length L*H*K (cw, zero-padded) or L*H (fc)
  int k_present = 0;
  // Layout descriptor: vec unrolls over (layers, heads, slots) for cw and
  // (layers, heads) for fc, where slots is the fixed K of the layout.
  int layers = 0;
  int heads = 0;
  int slots = 0;  // 0 in fc mode
};

// Token-count-weighted context mean and the output mean, flattened over
// (l, h, t). include_pre_qu averages over {pre, chunks, qu}; chunks_only
// restricts to the chunk segments.
struct ContextAggregate {
  int layers = 0, heads = 0, steps = 0;
  std::vector<double> context;
  std::vector<double> output;
};

ContextAggregate context_aggregate(const AttentionDump& dump,
                                   ContextDenominator mode = ContextDenominator::include_pre_qu);

// Chunk-wise lookback ratios, time-averaged and unrolled over
// (layer, head, chunk slot); slots past the present chunks stay zero.
// A zero denominator at some (l,h,t) contributes 0 with a warning.
LookbackFeatures lookback_ratios_cw(const AttentionDump& dump, int k,
                                    ContextDenominator mode = ContextDenominator::include_pre_qu);

// Full-context variant: one ratio per (layer, head).
LookbackFeatures lookback_ratios_fc(const AttentionDump& dump);

// Per-sample min-max scaling over the active positions (pad slots excluded,
// and left at exactly zero). A constant active part maps to all zeros with
// a warning.
LookbackFeatures normalize_features(LookbackFeatures features);

std::vector<AttentionDump> load_attention_dumps(const std::string& path);
void save_attention_dumps(const std::string& path, const std::vector<AttentionDump>& dumps);

std::vector<RawAttention> load_raw_attention(const std::string& path);
void save_raw_attention(const std::string& path, const std::vector<RawAttention>& dumps);

std::vector<LookbackFeatures> load_features(const std::string& path);
void save_features(const std::string& path, const std::vector<LookbackFeatures>& features);

}  // namespace ragcert
