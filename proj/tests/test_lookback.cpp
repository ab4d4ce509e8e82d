#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ragcert/error.hpp"
#include "ragcert/lookback.hpp"
#include "ragcert/rng.hpp"

using namespace ragcert;

namespace {

// One (l,h,t) cell per value list entry; broadcasts the same segment averages
// across all cells.
AttentionDump uniform_dump(int layers, int heads, int steps, std::vector<Segment> segments,
                           const std::vector<double>& segment_values) {
  AttentionDump d;
  d.qa_id = "t";
  d.layers = layers;
  d.heads = heads;
  d.steps = steps;
  d.segments = std::move(segments);
  for (int cell = 0; cell < layers * heads * steps; ++cell)
    for (double v : segment_values) d.a.push_back(v);
  return d;
}

AttentionDump random_dump(Rng& rng, int max_k) {
  int layers = 1 + static_cast<int>(rng.below(3));
  int heads = 1 + static_cast<int>(rng.below(3));
  int steps = 1 + static_cast<int>(rng.below(4));
  int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_k) + 1));

  AttentionDump d;
  d.qa_id = "r";
  d.layers = layers;
  d.heads = heads;
  d.steps = steps;
  d.segments.push_back({"pre", 1 + static_cast<int>(rng.below(5))});
  for (int c = 0; c < k; ++c)
    d.segments.push_back({"c_" + std::to_string(c + 1), 1 + static_cast<int>(rng.below(5))});
  d.segments.push_back({"qu", 1 + static_cast<int>(rng.below(5))});
  d.segments.push_back({"output", 1 + static_cast<int>(rng.below(5))});
  std::size_t total =
      static_cast<std::size_t>(layers) * heads * steps * d.segments.size();
  for (std::size_t i = 0; i < total; ++i) d.a.push_back(0.01 + rng.uniform01());
  return d;
}

}  // namespace

TEST_CASE("segment_average") {
  SUBCASE("two-token segment averages its attentions") {
    RawAttention raw;
    raw.qa_id = "x";
    raw.layers = raw.heads = raw.steps = 1;
    raw.prompt_tokens = 5;
    raw.layout = {{"pre", 0, 1}, {"c_1", 1, 2}, {"qu", 3, 1}, {"output", 4, 1}};
    raw.a = {0.5, 0.1, 0.3, 0.2, 0.4};
    auto dump = segment_average(raw);
    CHECK(dump.at(0, 0, 0, 0) == doctest::Approx(0.5));   // pre, single token
    CHECK(dump.at(0, 0, 0, 1) == doctest::Approx(0.2));   // mean of {0.1, 0.3}
    CHECK(dump.at(0, 0, 0, 2) == doctest::Approx(0.2));   // qu
    CHECK(dump.at(0, 0, 0, 3) == doctest::Approx(0.4));   // output
  }

  SUBCASE("uniform attention 1/P gives 1/P everywhere") {
    RawAttention raw;
    raw.qa_id = "u";
    raw.layers = 2;
    raw.heads = 1;
    raw.steps = 2;
    raw.prompt_tokens = 8;
    raw.layout = {{"pre", 0, 2}, {"c_1", 2, 3}, {"qu", 5, 2}, {"output", 7, 1}};
    raw.a.assign(static_cast<std::size_t>(2 * 1 * 2 * 8), 1.0 / 8.0);
    auto dump = segment_average(raw);
    for (int l = 0; l < 2; ++l)
      for (int t = 0; t < 2; ++t)
        for (int s = 0; s < 4; ++s)
          CHECK(dump.at(l, 0, t, s) == doctest::Approx(1.0 / 8.0));
  }

  SUBCASE("gapped or overlapping layouts are BadLayout") {
    RawAttention raw;
    raw.qa_id = "bad";
    raw.layers = raw.heads = raw.steps = 1;
    raw.prompt_tokens = 4;
    raw.a = {0.1, 0.2, 0.3, 0.4};

    raw.layout = {{"pre", 0, 1}, {"c_1", 2, 1}, {"qu", 3, 1}};  // gap at token 1
    CHECK_THROWS_AS(segment_average(raw), RagError);

    raw.layout = {{"pre", 0, 2}, {"c_1", 1, 2}, {"qu", 3, 1}};  // overlap
    CHECK_THROWS_AS(segment_average(raw), RagError);

    raw.layout = {{"pre", 0, 2}, {"c_1", 2, 1}, {"qu", 3, 1}};  // covers only 4 of 4 but no output
    try {
      auto dump = segment_average(raw);
      dump.validate();
      FAIL("expected a validation error for the missing output segment");
    } catch (const RagError&) {
    }
  }
}

TEST_CASE("context_aggregate") {
  SUBCASE("token-count-weighted mean") {
    auto dump = uniform_dump(1, 1, 1, {{"pre", 2}, {"c_1", 2}, {"qu", 2}, {"output", 1}},
                             {0.1, 0.3, 0.2, 0.4});
    auto agg = context_aggregate(dump);
    CHECK(agg.context[0] == doctest::Approx(0.2));
    CHECK(agg.output[0] == doctest::Approx(0.4));
  }

  SUBCASE("constant field is preserved") {
    auto dump = uniform_dump(1, 1, 1, {{"pre", 1}, {"c_1", 4}, {"qu", 1}, {"output", 2}},
                             {0.7, 0.7, 0.7, 0.1});
    CHECK(context_aggregate(dump).context[0] == doctest::Approx(0.7));
  }

  SUBCASE("zero attention outside output gives zero context") {
    auto dump = uniform_dump(1, 1, 1, {{"pre", 1}, {"c_1", 2}, {"qu", 1}, {"output", 2}},
                             {0.0, 0.0, 0.0, 0.9});
    CHECK(context_aggregate(dump).context[0] == 0.0);
    CHECK(context_aggregate(dump).output[0] == doctest::Approx(0.9));
  }

  SUBCASE("chunks-only denominator ignores pre and qu") {
    auto dump = uniform_dump(1, 1, 1, {{"pre", 5}, {"c_1", 2}, {"qu", 5}, {"output", 1}},
                             {0.9, 0.3, 0.9, 0.1});
    CHECK(context_aggregate(dump, ContextDenominator::chunks_only).context[0] ==
          doctest::Approx(0.3));
  }

  SUBCASE("weighted-mean consistency on random dumps") {
    Rng rng(41);
    for (int trial = 0; trial < 100; ++trial) {
      auto dump = random_dump(rng, 5);
      auto agg = context_aggregate(dump);
      std::size_t cell = 0;
      for (int l = 0; l < dump.layers; ++l)
        for (int h = 0; h < dump.heads; ++h)
          for (int t = 0; t < dump.steps; ++t, ++cell) {
            double weighted = 0.0, tokens = 0.0;
            for (int s = 0; s < static_cast<int>(dump.segments.size()); ++s) {
              auto kind = segment_kind(dump.segments[s].name);
              if (kind == SegmentKind::output) continue;
              weighted += dump.segments[s].n_tokens * dump.at(l, h, t, s);
              tokens += dump.segments[s].n_tokens;
            }
            CHECK(std::abs(weighted - tokens * agg.context[cell]) < 1e-9);
          }
    }
  }
}

TEST_CASE("chunk-wise lookback ratios") {
  SUBCASE("hand-checked ratio") {
    // A(c_1) = 0.3, context mean 0.5, output 0.5: LR = 2 * 0.3 / 1.0.
    auto dump = uniform_dump(1, 1, 1, {{"pre", 1}, {"c_1", 2}, {"qu", 1}, {"output", 1}},
                             {0.8, 0.3, 0.6, 0.5});
    auto features = lookback_ratios_cw(dump, 2);
    REQUIRE(features.vec.size() == 2);
    CHECK(features.vec[0] == doctest::Approx(0.6));
    CHECK(features.vec[1] == 0.0);  // padded slot
    CHECK(features.k_present == 1);
  }

  SUBCASE("zero-attention chunk has ratio zero") {
    auto dump = uniform_dump(1, 1, 2, {{"pre", 1}, {"c_1", 2}, {"qu", 1}, {"output", 1}},
                             {0.5, 0.0, 0.5, 0.5});
    auto features = lookback_ratios_cw(dump, 3);
    CHECK(features.vec[0] == 0.0);
  }

  SUBCASE("padding fills slots past the present chunks") {
    auto dump = uniform_dump(1, 1, 1, {{"pre", 1}, {"c_1", 2}, {"qu", 1}, {"output", 1}},
                             {0.2, 0.4, 0.2, 0.2});
    auto features = lookback_ratios_cw(dump, 10);
    REQUIRE(features.vec.size() == 10);
    CHECK(features.vec[0] > 0.0);
    for (std::size_t i = 1; i < 10; ++i) CHECK(features.vec[i] == 0.0);
  }

  SUBCASE("more chunks than K is an error") {
    auto dump = uniform_dump(1, 1, 1,
                             {{"pre", 1}, {"c_1", 1}, {"c_2", 1}, {"qu", 1}, {"output", 1}},
                             {0.1, 0.1, 0.1, 0.1, 0.1});
    CHECK_THROWS_AS(lookback_ratios_cw(dump, 1), RagError);
  }

  SUBCASE("zero denominator yields zero ratios") {
    auto dump = uniform_dump(1, 1, 1, {{"pre", 1}, {"c_1", 2}, {"qu", 1}, {"output", 1}},
                             {0.0, 0.0, 0.0, 0.0});
    auto features = lookback_ratios_cw(dump, 2);
    CHECK(features.vec[0] == 0.0);
  }

  SUBCASE("time averaging over distinct steps") {
    AttentionDump d;
    d.qa_id = "t";
    d.layers = d.heads = 1;
    d.steps = 2;
    d.segments = {{"pre", 1}, {"c_1", 1}, {"qu", 1}, {"output", 1}};
    // step 0: c_1 = 0.3, all others 0.3 -> context 0.3, output 0.3, LR = K*0.3/0.6
    // step 1: c_1 = 0.6, others 0.6 -> LR = K*0.6/1.2; identical ratios, mean equals them
    d.a = {0.3, 0.3, 0.3, 0.3, 0.6, 0.6, 0.6, 0.6};
    auto features = lookback_ratios_cw(d, 1);
    CHECK(features.vec[0] == doctest::Approx(0.5));
  }
}

TEST_CASE("full-context lookback ratios") {
  SUBCASE("balanced context and output give 0.5") {
    auto dump = uniform_dump(2, 2, 3, {{"pre", 1}, {"c_1", 2}, {"qu", 1}, {"output", 4}},
                             {0.25, 0.25, 0.25, 0.25});
    auto features = lookback_ratios_fc(dump);
    REQUIRE(features.vec.size() == 4);
    for (double v : features.vec) CHECK(v == doctest::Approx(0.5));
  }

  SUBCASE("zero output attention gives 1.0") {
    auto dump = uniform_dump(1, 2, 1, {{"pre", 1}, {"c_1", 2}, {"qu", 1}, {"output", 4}},
                             {0.3, 0.3, 0.3, 0.0});
    for (double v : lookback_ratios_fc(dump).vec) CHECK(v == doctest::Approx(1.0));
  }

  SUBCASE("vector length is layers*heads") {
    auto dump = uniform_dump(2, 2, 1, {{"pre", 1}, {"c_1", 1}, {"qu", 1}, {"output", 1}},
                             {0.1, 0.1, 0.1, 0.1});
    CHECK(lookback_ratios_fc(dump).vec.size() == 4);
  }

  SUBCASE("fc ratios stay in [0,1] on random dumps") {
    Rng rng(43);
    for (int trial = 0; trial < 100; ++trial) {
      auto features = lookback_ratios_fc(random_dump(rng, 4));
      for (double v : features.vec) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }
}

TEST_CASE("cw with a lone chunk equal to pre and qu matches fc") {
  // K = 1 and A_pre = A_qu = A_c1 make the context mean equal A_c1, so the
  // chunk ratio and the full-context ratio coincide.
  auto dump = uniform_dump(2, 1, 2, {{"pre", 1}, {"c_1", 3}, {"qu", 1}, {"output", 2}},
                           {0.4, 0.4, 0.4, 0.25});
  auto cw = lookback_ratios_cw(dump, 1);
  auto fc = lookback_ratios_fc(dump);
  REQUIRE(cw.vec.size() == fc.vec.size());
  for (std::size_t i = 0; i < cw.vec.size(); ++i)
    CHECK(cw.vec[i] == doctest::Approx(fc.vec[i]).epsilon(1e-12));
}

TEST_CASE("normalize_features") {
  SUBCASE("plain min-max") {
    LookbackFeatures f;
    f.qa_id = "x";
    f.mode = FeatureMode::fc;
    f.layers = 1;
    f.heads = 3;
    f.vec = {0.2, 0.4, 0.6};
    auto out = normalize_features(f);
    CHECK(out.vec[0] == doctest::Approx(0.0));
    CHECK(out.vec[1] == doctest::Approx(0.5));
    CHECK(out.vec[2] == doctest::Approx(1.0));
  }

  SUBCASE("padded slots are excluded and stay zero") {
    LookbackFeatures f;
    f.qa_id = "x";
    f.mode = FeatureMode::cw;
    f.layers = 1;
    f.heads = 1;
    f.slots = 3;
    f.k_present = 2;
    f.vec = {0.2, 0.4, 0.0};
    auto out = normalize_features(f);
    CHECK(out.vec[0] == doctest::Approx(0.0));
    CHECK(out.vec[1] == doctest::Approx(1.0));
    CHECK(out.vec[2] == 0.0);
  }

  SUBCASE("constant vector maps to zeros") {
    LookbackFeatures f;
    f.qa_id = "x";
    f.mode = FeatureMode::fc;
    f.layers = 1;
    f.heads = 2;
    f.vec = {0.3, 0.3};
    auto out = normalize_features(f);
    CHECK(out.vec[0] == 0.0);
    CHECK(out.vec[1] == 0.0);
  }
}

TEST_CASE("dump validation and persistence") {
  auto dump = uniform_dump(1, 1, 1, {{"pre", 1}, {"c_1", 2}, {"qu", 1}, {"output", 1}},
                           {0.1, 0.2, 0.3, 0.4});
  dump.validate();

  SUBCASE("wrong array length") {
    auto bad = dump;
    bad.a.pop_back();
    CHECK_THROWS_AS(bad.validate(), RagError);
  }

  SUBCASE("negative attention") {
    auto bad = dump;
    bad.a[1] = -0.1;
    CHECK_THROWS_AS(bad.validate(), RagError);
  }

  SUBCASE("missing qu segment") {
    auto bad = uniform_dump(1, 1, 1, {{"pre", 1}, {"c_1", 2}, {"output", 1}}, {0.1, 0.2, 0.4});
    CHECK_THROWS_AS(bad.validate(), RagError);
  }

  SUBCASE("zero-token segment") {
    auto bad = uniform_dump(1, 1, 1, {{"pre", 0}, {"c_1", 2}, {"qu", 1}, {"output", 1}},
                            {0.1, 0.2, 0.3, 0.4});
    CHECK_THROWS_AS(bad.validate(), RagError);
  }

  SUBCASE("unknown segment name") {
    CHECK_THROWS_AS(segment_kind("preamble"), RagError);
    CHECK(segment_kind("c_12") == SegmentKind::chunk);
    CHECK(segment_kind("pre") == SegmentKind::pre);
  }

  SUBCASE("jsonl round-trip") {
    std::string path = "/tmp/ragcert_dumps_roundtrip.jsonl";
    save_attention_dumps(path, {dump});
    auto loaded = load_attention_dumps(path);
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].a == dump.a);
    CHECK(loaded[0].segments.size() == dump.segments.size());
    std::remove(path.c_str());
  }

  SUBCASE("loader rejects array-length mismatches with the line number") {
    std::string path = "/tmp/ragcert_dumps_badlen.jsonl";
    std::ofstream(path) << R"({"qa_id":"x","L":1,"H":1,"T":1,)"
                        << R"("segments":[{"name":"pre","n_tokens":1},{"name":"c_1","n_tokens":1},)"
                        << R"({"name":"qu","n_tokens":1},{"name":"output","n_tokens":1}],)"
                        << R"("a":[0.1,0.2,0.3]})" << "\n";
    try {
      load_attention_dumps(path);
      FAIL("expected a length-mismatch error");
    } catch (const RagError& e) {
      CHECK(std::string(e.what()).find(":1") != std::string::npos);
      CHECK(std::string(e.what()).find("expected 4") != std::string::npos);
    }
    std::remove(path.c_str());
  }

  SUBCASE("feature jsonl round-trip") {
    auto features = lookback_ratios_cw(dump, 4);
    std::string path = "/tmp/ragcert_features_roundtrip.jsonl";
    save_features(path, {features});
    auto loaded = load_features(path);
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].vec == features.vec);
    CHECK(loaded[0].k_present == features.k_present);
    CHECK(loaded[0].slots == features.slots);
    std::remove(path.c_str());
  }
}
