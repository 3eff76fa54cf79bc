#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "turnkit/angles.hpp"
#include "turnkit/error.hpp"
#include "turnkit/synth.hpp"
#include "turnkit/threshold.hpp"

using namespace turnkit;

namespace {

// Frozen at first build; any change to the generator or RNG shows up here.
constexpr std::uint64_t kGoldenSeed42x100 = 0xbe16a63b791bad0bULL;

WalkSpec spec_of(std::vector<WalkSegment> segs, double noise = 0.0, std::uint64_t seed = 1) {
  WalkSpec s;
  s.segments = std::move(segs);
  s.yaw_noise_sigma = noise;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("straight walk has constant yaw and no truth") {
  const auto w = generate_walk(spec_of({{12, 0.0, 1}}));
  CHECK(w.truth.empty());
  for (double y : w.yaw) CHECK(y == 0.0);
  CHECK(w.features.size() == w.yaw.size());
}

TEST_CASE("L-walk") {
  const auto w = generate_walk(spec_of({{10, 90.0, 3}, {10, 0.0, 1}}));
  std::vector<double> want(10, 0.0);
  want.insert(want.end(), {30.0, 60.0, 90.0});
  want.insert(want.end(), 11, 90.0);
  REQUIRE(w.yaw.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(w.yaw[i] == doctest::Approx(want[i]).epsilon(1e-12));
  CHECK(w.truth == std::vector<StepSpan>{{10, 12}});
}

TEST_CASE("turn steps carry the feature shift") {
  auto s = spec_of({{5, 90.0, 2}, {5, 0.0, 1}});
  s.feature_shift = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  const auto w = generate_walk(s);
  const auto base = baseline_features();
  for (std::size_t i = 0; i < w.features.size(); ++i) {
    const bool turn = i == 5 || i == 6;
    for (std::size_t d = 0; d < kFeatureDim; ++d)
      CHECK(w.features[i][d] == doctest::Approx(base[d] + (turn ? s.feature_shift[d] : 0.0)));
  }
}

TEST_CASE("yaw wraps into [-180, 180)") {
  const auto w = generate_walk(spec_of({{3, 135.0, 1}, {3, 135.0, 1}, {3, 0.0, 1}}));
  for (double y : w.yaw) {
    CHECK(y >= -180.0);
    CHECK(y < 180.0);
  }
  CHECK(w.yaw.back() == doctest::Approx(-90.0));
}

TEST_CASE("walk spec validation") {
  CHECK_THROWS_AS(generate_walk(spec_of({{0, 90.0, 1}})), Error);
  CHECK_THROWS_AS(generate_walk(spec_of({{3, 90.0, 0}})), Error);
  CHECK_THROWS_AS(generate_walk(spec_of({{3, 90.0, 1}}, -1.0)), Error);
}

TEST_CASE("generation is deterministic and seed sensitive") {
  const CorpusTemplate tmpl;
  const auto a = generate_corpus(20, tmpl, 5);
  const auto b = generate_corpus(20, tmpl, 5);
  const auto c = generate_corpus(20, tmpl, 6);
  CHECK(corpus_checksum(a) == corpus_checksum(b));
  CHECK(corpus_checksum(a) != corpus_checksum(c));
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].yaw == b[i].yaw);
    CHECK(a[i].truth == b[i].truth);
  }
}

TEST_CASE("committed corpus checksum") {
  const auto corpus = generate_corpus(100, CorpusTemplate{}, 42);
  CHECK(corpus.size() == 100);
  std::size_t turns = 0;
  for (const auto& w : corpus) turns += w.truth.size();
  CHECK(turns > 0);
  CHECK(corpus_checksum(corpus) == kGoldenSeed42x100);
}

TEST_CASE("corpus walks respect the template") {
  const CorpusTemplate tmpl;
  const auto specs = corpus_specs(200, tmpl, 11);
  for (const auto& s : specs) {
    int turns = 0;
    for (const auto& seg : s.segments) {
      CHECK(seg.straight_steps >= tmpl.min_straight);
      CHECK(seg.straight_steps <= tmpl.max_straight);
      if (seg.turn_angle != 0.0) {
        ++turns;
        CHECK(seg.turn_steps >= tmpl.min_turn_steps);
        CHECK(seg.turn_steps <= tmpl.max_turn_steps);
        CHECK(std::find(tmpl.turn_angles.begin(), tmpl.turn_angles.end(), seg.turn_angle) != tmpl.turn_angles.end());
      }
    }
    CHECK(turns >= tmpl.min_turns);
    CHECK(turns <= tmpl.max_turns);
  }
}

TEST_CASE("truth and straight runs tile the walk") {
  const auto corpus = generate_corpus(50, CorpusTemplate{}, 8);
  const auto specs = corpus_specs(50, CorpusTemplate{}, 8);
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    const auto& w = corpus[k];
    std::size_t expected = 0;
    for (const auto& seg : specs[k].segments) expected += seg.straight_steps + (seg.turn_angle != 0.0 ? seg.turn_steps : 1);
    CHECK(w.yaw.size() == expected);
    std::vector<int> label(w.yaw.size(), 0);
    for (std::size_t t = 0; t < w.truth.size(); ++t) {
      CHECK(w.truth[t].first <= w.truth[t].last);
      CHECK(w.truth[t].last < w.yaw.size());
      if (t > 0) CHECK(w.truth[t - 1].last + 1 < w.truth[t].first);
      for (std::size_t i = w.truth[t].first; i <= w.truth[t].last; ++i) ++label[i];
    }
    for (int l : label) CHECK(l <= 1);
  }
}

TEST_CASE("noise does not change truth") {
  auto lo = corpus_specs(30, CorpusTemplate{}, 3);
  for (auto& s : lo) {
    const auto a = generate_walk(s);
    s.yaw_noise_sigma *= 2.0;
    const auto b = generate_walk(s);
    CHECK(a.truth == b.truth);
    CHECK(a.yaw.size() == b.yaw.size());
  }
}

TEST_CASE("zero-noise walks: every turn is hit by a threshold flag") {
  CorpusTemplate tmpl;
  tmpl.yaw_noise_sigma = 0.0;
  const auto corpus = generate_corpus(100, tmpl, 12);
  ThresholdConfig cfg;
  cfg.tau = 5.0;  // below the slowest ramp, 45 degrees over 8 steps
  for (const auto& w : corpus) {
    const auto flags = detect_threshold(w.yaw, cfg);
    for (const auto& t : w.truth) {
      bool hit = false;
      for (auto f : flags) hit |= t.first <= f && f <= t.last;
      CHECK(hit);
    }
  }
}

TEST_CASE("truth JSON round trip") {
  const std::vector<StepSpan> t{{3, 5}, {10, 10}};
  CHECK(parse_truth_json(write_truth_json(t)) == t);
  CHECK(parse_truth_json("{\"turns\": []}").empty());
  CHECK_THROWS_AS(parse_truth_json("{\"turns\": [[5, 3]]}"), Error);
  CHECK_THROWS_AS(parse_truth_json("[]"), Error);
}

TEST_CASE("synthesized IMU reproduces the step yaw") {
  const auto w = generate_walk(spec_of({{6, 90.0, 3}, {4, -45.0, 2}, {6, 0.0, 1}}));
  const ImuSynthConfig cfg;
  const auto log = synthesize_imu(w, cfg);
  CHECK(log.sample_rate_hz == cfg.sample_rate_hz);
  CHECK(log.samples.size() == w.yaw.size() * 50 + 1);
  CHECK_NOTHROW(validate_log(log));
  const auto steps = detect_steps(log);
  REQUIRE(steps.size() == w.yaw.size());
  for (std::size_t i = 0; i < steps.size(); ++i) CHECK(std::abs(wrapped_delta_deg(steps[i].yaw, w.yaw[i])) < 2.0);
}
