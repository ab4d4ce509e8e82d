#include "ragcert/lookback.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "ragcert/error.hpp"
#include "ragcert/io.hpp"
#include "ragcert/log.hpp"

namespace ragcert {

using nlohmann::json;

SegmentKind segment_kind(const std::string& name) {
  if (name == "pre") return SegmentKind::pre;
  if (name == "qu") return SegmentKind::qu;
  if (name == "output") return SegmentKind::output;
  if (name.size() > 2 && name[0] == 'c' && name[1] == '_' &&
      std::all_of(name.begin() + 2, name.end(),
                  [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    return SegmentKind::chunk;
  raise(Errc::validation_error, "unknown segment name '" + name + "'");
}

int AttentionDump::chunk_count() const {
  int k = 0;
  for (const auto& s : segments)
    if (segment_kind(s.name) == SegmentKind::chunk) ++k;
  return k;
}

void AttentionDump::validate() const {
  if (layers < 1 || heads < 1 || steps < 1)
    raise(Errc::validation_error, "dump '" + qa_id + "': L, H, T must all be >= 1");
  int pre = 0, qu = 0, output = 0;
  for (const auto& s : segments) {
    if (s.n_tokens < 1)
      raise(Errc::validation_error,
            "dump '" + qa_id + "': segment '" + s.name + "' has n_tokens < 1");
    switch (segment_kind(s.name)) {
      case SegmentKind::pre: ++pre; break;
      case SegmentKind::qu: ++qu; break;
      case SegmentKind::output: ++output; break;
      case SegmentKind::chunk: break;
    }
  }
  if (pre != 1 || qu != 1 || output != 1)
    raise(Errc::validation_error,
          "dump '" + qa_id + "': segments must contain exactly one pre, one qu, one output");
  std::size_t expected = static_cast<std::size_t>(layers) * heads * steps * segments.size();
  if (a.size() != expected)
    raise(Errc::format_error, "dump '" + qa_id + "': attention array has " +
                                  std::to_string(a.size()) + " values, expected " +
                                  std::to_string(expected));
  for (double v : a)
    if (!(v >= 0.0) || !std::isfinite(v))
      raise(Errc::validation_error, "dump '" + qa_id + "': attention values must be finite and >= 0");
}

AttentionDump segment_average(const RawAttention& raw) {
  if (raw.layers < 1 || raw.heads < 1 || raw.steps < 1 || raw.prompt_tokens < 1)
    raise(Errc::validation_error, "raw attention '" + raw.qa_id + "': bad dimensions");
  std::size_t expected = static_cast<std::size_t>(raw.layers) * raw.heads * raw.steps *
                         raw.prompt_tokens;
  if (raw.a.size() != expected)
    raise(Errc::format_error, "raw attention '" + raw.qa_id + "': array size mismatch");

  // Ranges must tile the prompt in order.
  int cursor = 0;
  for (const auto& r : raw.layout) {
    if (r.start != cursor || r.length < 1)
      raise(Errc::validation_error, "BadLayout: segment '" + r.name + "' of '" + raw.qa_id +
                                        "' does not tile the prompt (start " +
                                        std::to_string(r.start) + ", expected " +
                                        std::to_string(cursor) + ")");
    cursor += r.length;
  }
  if (cursor != raw.prompt_tokens)
    raise(Errc::validation_error, "BadLayout: segments of '" + raw.qa_id + "' cover " +
                                      std::to_string(cursor) + " of " +
                                      std::to_string(raw.prompt_tokens) + " prompt tokens");

  AttentionDump dump;
  dump.qa_id = raw.qa_id;
  dump.layers = raw.layers;
  dump.heads = raw.heads;
  dump.steps = raw.steps;
  for (const auto& r : raw.layout) dump.segments.push_back({r.name, r.length});
  dump.a.resize(static_cast<std::size_t>(raw.layers) * raw.heads * raw.steps *
                raw.layout.size());

  std::size_t out = 0;
  for (int l = 0; l < raw.layers; ++l)
    for (int h = 0; h < raw.heads; ++h)
      for (int t = 0; t < raw.steps; ++t) {
        std::size_t base =
            ((static_cast<std::size_t>(l) * raw.heads + h) * raw.steps + t) * raw.prompt_tokens;
        for (const auto& r : raw.layout) {
          double sum = 0.0;
          for (int p = r.start; p < r.start + r.length; ++p) sum += raw.a[base + p];
          dump.a[out++] = sum / static_cast<double>(r.length);
        }
      }
  dump.validate();
  return dump;
}

ContextAggregate context_aggregate(const AttentionDump& dump, ContextDenominator mode) {
  dump.validate();
  std::size_t cells = static_cast<std::size_t>(dump.layers) * dump.heads * dump.steps;
  ContextAggregate agg;
  agg.layers = dump.layers;
  agg.heads = dump.heads;
  agg.steps = dump.steps;
  agg.context.assign(cells, 0.0);
  agg.output.assign(cells, 0.0);

  std::vector<int> ctx_segments, out_segments;
  double ctx_tokens = 0.0;
  for (int s = 0; s < static_cast<int>(dump.segments.size()); ++s) {
    SegmentKind kind = segment_kind(dump.segments[s].name);
    bool in_context = kind == SegmentKind::chunk ||
                      (mode == ContextDenominator::include_pre_qu &&
                       (kind == SegmentKind::pre || kind == SegmentKind::qu));
    if (in_context) {
      ctx_segments.push_back(s);
      ctx_tokens += dump.segments[s].n_tokens;
    } else if (kind == SegmentKind::output) {
      out_segments.push_back(s);
    }
  }

  std::size_t cell = 0;
  for (int l = 0; l < dump.layers; ++l)
    for (int h = 0; h < dump.heads; ++h)
      for (int t = 0; t < dump.steps; ++t, ++cell) {
        double weighted = 0.0;
        for (int s : ctx_segments)
          weighted += dump.segments[s].n_tokens * dump.at(l, h, t, s);
        agg.context[cell] = ctx_tokens > 0.0 ? weighted / ctx_tokens : 0.0;
        agg.output[cell] = dump.at(l, h, t, out_segments.front());
      }
  return agg;
}

namespace {

// Segment indices of the chunks, in layout order (highest retrieval score first).
std::vector<int> chunk_segment_indices(const AttentionDump& dump) {
  std::vector<int> idx;
  for (int s = 0; s < static_cast<int>(dump.segments.size()); ++s)
    if (segment_kind(dump.segments[s].name) == SegmentKind::chunk) idx.push_back(s);
  return idx;
}

}  // namespace

LookbackFeatures lookback_ratios_cw(const AttentionDump& dump, int k, ContextDenominator mode) {
  if (k < 1) raise(Errc::usage_error, "feature layout K must be >= 1");
  auto chunks = chunk_segment_indices(dump);
  if (static_cast<int>(chunks.size()) > k)
    raise(Errc::validation_error, "dump '" + dump.qa_id + "' has " +
                                      std::to_string(chunks.size()) +
                                      " chunk segments, more than K=" + std::to_string(k));
  auto agg = context_aggregate(dump, mode);

  LookbackFeatures features;
  features.qa_id = dump.qa_id;
  features.mode = FeatureMode::cw;
  features.k_present = static_cast<int>(chunks.size());
  features.layers = dump.layers;
  features.heads = dump.heads;
  features.slots = k;
  features.vec.assign(static_cast<std::size_t>(dump.layers) * dump.heads * k, 0.0);

  bool degenerate = false;
  std::size_t cell = 0;
  for (int l = 0; l < dump.layers; ++l)
    for (int h = 0; h < dump.heads; ++h) {
      std::size_t lh_base = (static_cast<std::size_t>(l) * dump.heads + h) *
                            static_cast<std::size_t>(k);
      for (int t = 0; t < dump.steps; ++t, ++cell) {
        double denom = agg.context[cell] + agg.output[cell];
        for (std::size_t i = 0; i < chunks.size(); ++i) {
          double ratio = 0.0;
          if (denom > 0.0)
            ratio = static_cast<double>(k) * dump.at(l, h, t, chunks[i]) / denom;
          else
            degenerate = true;
          features.vec[lh_base + i] += ratio / static_cast<double>(dump.steps);
        }
      }
    }
  if (degenerate)
    log::warn("dump '" + dump.qa_id + "': zero attention denominator, ratios forced to 0");
  return features;
}

LookbackFeatures lookback_ratios_fc(const AttentionDump& dump) {
  auto agg = context_aggregate(dump, ContextDenominator::include_pre_qu);

  LookbackFeatures features;
  features.qa_id = dump.qa_id;
  features.mode = FeatureMode::fc;
  features.k_present = dump.chunk_count();
  features.layers = dump.layers;
  features.heads = dump.heads;
  features.slots = 0;
  features.vec.assign(static_cast<std::size_t>(dump.layers) * dump.heads, 0.0);

  bool degenerate = false;
  std::size_t cell = 0;
  for (int l = 0; l < dump.layers; ++l)
    for (int h = 0; h < dump.heads; ++h) {
      std::size_t lh = static_cast<std::size_t>(l) * dump.heads + h;
      for (int t = 0; t < dump.steps; ++t, ++cell) {
        double denom = agg.context[cell] + agg.output[cell];
        double ratio = 0.0;
        if (denom > 0.0)
          ratio = agg.context[cell] / denom;
        else
          degenerate = true;
        features.vec[lh] += ratio / static_cast<double>(dump.steps);
      }
    }
  if (degenerate)
    log::warn("dump '" + dump.qa_id + "': zero attention denominator, ratios forced to 0");
  return features;
}

LookbackFeatures normalize_features(LookbackFeatures features) {
  // Active positions: all of them for fc, the present-chunk slots for cw.
  std::vector<std::size_t> active;
  if (features.mode == FeatureMode::fc) {
    active.resize(features.vec.size());
    for (std::size_t i = 0; i < active.size(); ++i) active[i] = i;
  } else {
    std::size_t blocks = static_cast<std::size_t>(features.layers) * features.heads;
    if (features.slots < 1 || features.k_present < 0 || features.k_present > features.slots ||
        features.vec.size() != blocks * static_cast<std::size_t>(features.slots))
      raise(Errc::validation_error,
            "feature vector of '" + features.qa_id + "' does not match its layout");
    for (std::size_t b = 0; b < blocks; ++b)
      for (std::size_t i = 0; i < static_cast<std::size_t>(features.k_present); ++i)
        active.push_back(b * features.slots + i);
  }

  if (active.empty()) {
    log::warn("feature vector of '" + features.qa_id + "' has no active positions");
    return features;
  }

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i : active) {
    lo = std::min(lo, features.vec[i]);
    hi = std::max(hi, features.vec[i]);
  }
  if (hi <= lo) {
    log::warn("feature vector of '" + features.qa_id + "' is constant; normalized to zeros");
    for (std::size_t i : active) features.vec[i] = 0.0;
    return features;
  }
  for (std::size_t i : active) features.vec[i] = (features.vec[i] - lo) / (hi - lo);
  return features;
}

std::vector<AttentionDump> load_attention_dumps(const std::string& path) {
  std::vector<AttentionDump> dumps;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    std::string where = path + ":" + std::to_string(line);
    AttentionDump d;
    d.qa_id = require_field<std::string>(j, "qa_id", where);
    d.layers = require_field<int>(j, "L", where);
    d.heads = require_field<int>(j, "H", where);
    d.steps = require_field<int>(j, "T", where);
    json segments = require_field<json>(j, "segments", where);
    for (const auto& s : segments)
      d.segments.push_back({require_field<std::string>(s, "name", where),
                            require_field<int>(s, "n_tokens", where)});
    d.a = require_field<std::vector<double>>(j, "a", where);
    try {
      d.validate();
    } catch (const RagError& err) {
      raise(err.code(), where + ": " + err.what());
    }
    dumps.push_back(std::move(d));
  });
  return dumps;
}

void save_attention_dumps(const std::string& path, const std::vector<AttentionDump>& dumps) {
  std::vector<json> lines;
  lines.reserve(dumps.size());
  for (const auto& d : dumps) {
    json segments = json::array();
    for (const auto& s : d.segments)
      segments.push_back({{"name", s.name}, {"n_tokens", s.n_tokens}});
    lines.push_back({{"qa_id", d.qa_id},
                     {"L", d.layers},
                     {"H", d.heads},
                     {"T", d.steps},
                     {"segments", segments},
                     {"a", d.a}});
  }
  write_jsonl(path, lines);
}

std::vector<RawAttention> load_raw_attention(const std::string& path) {
  std::vector<RawAttention> dumps;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    std::string where = path + ":" + std::to_string(line);
    RawAttention r;
    r.qa_id = require_field<std::string>(j, "qa_id", where);
    r.layers = require_field<int>(j, "L", where);
    r.heads = require_field<int>(j, "H", where);
    r.steps = require_field<int>(j, "T", where);
    r.prompt_tokens = require_field<int>(j, "P", where);
    json layout = require_field<json>(j, "segments", where);
    for (const auto& s : layout)
      r.layout.push_back({require_field<std::string>(s, "name", where),
                          require_field<int>(s, "start", where),
                          require_field<int>(s, "length", where)});
    r.a = require_field<std::vector<double>>(j, "a", where);
    dumps.push_back(std::move(r));
  });
  return dumps;
}

void save_raw_attention(const std::string& path, const std::vector<RawAttention>& dumps) {
  std::vector<json> lines;
  for (const auto& r : dumps) {
    json layout = json::array();
    for (const auto& s : r.layout)
      layout.push_back({{"name", s.name}, {"start", s.start}, {"length", s.length}});
    lines.push_back({{"qa_id", r.qa_id},
                     {"L", r.layers},
                     {"H", r.heads},
                     {"T", r.steps},
                     {"P", r.prompt_tokens},
                     {"segments", layout},
                     {"a", r.a}});
  }
  write_jsonl(path, lines);
}

std::vector<LookbackFeatures> load_features(const std::string& path) {
  std::vector<LookbackFeatures> features;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    std::string where = path + ":" + std::to_string(line);
    LookbackFeatures f;
    f.qa_id = require_field<std::string>(j, "qa_id", where);
    std::string mode = require_field<std::string>(j, "mode", where);
    if (mode == "cw")
      f.mode = FeatureMode::cw;
    else if (mode == "fc")
      f.mode = FeatureMode::fc;
    else
      raise(Errc::format_error, where + ": mode must be 'cw' or 'fc'");
    f.k_present = require_field<int>(j, "k_present", where);
    f.layers = require_field<int>(j, "L", where);
    f.heads = require_field<int>(j, "H", where);
    f.slots = require_field<int>(j, "K", where);
    f.vec = require_field<std::vector<double>>(j, "vector", where);
    for (double v : f.vec)
      if (!std::isfinite(v)) raise(Errc::validation_error, where + ": non-finite feature value");
    features.push_back(std::move(f));
  });
  return features;
}

void save_features(const std::string& path, const std::vector<LookbackFeatures>& features) {
  std::vector<json> lines;
  lines.reserve(features.size());
  for (const auto& f : features)
    lines.push_back({{"qa_id", f.qa_id},
                     {"mode", f.mode == FeatureMode::cw ? "cw" : "fc"},
                     {"k_present", f.k_present},
                     {"L", f.layers},
                     {"H", f.heads},
                     {"K", f.slots},
                     {"vector", f.vec}});
  write_jsonl(path, lines);
}

}  // namespace ragcert
