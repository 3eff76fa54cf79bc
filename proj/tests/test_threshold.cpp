#include <doctest.h>

#include <set>
#include <vector>

#include "turnkit/error.hpp"
#include "turnkit/rng.hpp"
#include "turnkit/threshold.hpp"

using namespace turnkit;

namespace {

using Flags = std::vector<std::size_t>;

std::vector<StepSpan> spans(const std::vector<TurnEvent>& ev) {
  std::vector<StepSpan> s;
  for (const auto& e : ev) s.push_back(e.span());
  return s;
}

// Direct restatement of the merge rule: start a new run whenever the gap to
// the previous flag exceeds merge_gap + 1.
std::vector<StepSpan> merge_oracle(const Flags& flags, std::size_t gap) {
  std::vector<StepSpan> out;
  for (std::size_t f : flags) {
    if (!out.empty() && f - out.back().last <= gap + 1)
      out.back().last = f;
    else
      out.push_back({f, f});
  }
  return out;
}

Flags random_flags(Rng& rng, std::size_t n) {
  Flags f;
  for (std::size_t i = 1; i < n; ++i)
    if (rng.uniform() < 0.3) f.push_back(i);
  return f;
}

}  // namespace

TEST_CASE("detect_threshold examples") {
  const std::vector<double> a{0, 30, 30};
  CHECK(detect_threshold(a) == Flags{1});
  const std::vector<double> b{0, 10, 20, 30};
  CHECK(detect_threshold(b).empty());
  const std::vector<double> c{170, -170};
  CHECK(detect_threshold(c).empty());
  const std::vector<double> d{170, -150};
  CHECK(detect_threshold(d) == Flags{1});
  const std::vector<double> exact{0, 22.5};
  CHECK(detect_threshold(exact).empty());
}

TEST_CASE("detect_threshold errors") {
  const std::vector<double> one{0.0};
  CHECK_THROWS_AS(detect_threshold(one), Error);
  ThresholdConfig bad;
  bad.tau = 0.0;
  const std::vector<double> two{0.0, 1.0};
  CHECK_THROWS_AS(detect_threshold(two, bad), Error);
}

TEST_CASE("threshold events carry the delta as score") {
  const std::vector<double> y{0, 90, 90, 45};
  const auto ev = threshold_events(y);
  REQUIRE(ev.size() == 2);
  CHECK(ev[0].first_step == 1);
  CHECK(ev[0].score == doctest::Approx(0.5));
  CHECK(ev[1].first_step == 3);
  CHECK(ev[1].score == doctest::Approx(0.25));
  CHECK(ev[0].method == Method::threshold);
}

TEST_CASE("merge_adjacent examples") {
  CHECK(spans(merge_adjacent(Flags{10, 11, 12})) == std::vector<StepSpan>{{10, 12}});
  CHECK(merge_adjacent(Flags{}).empty());
  CHECK(spans(merge_adjacent(Flags{3, 5, 9})) == std::vector<StepSpan>{{3, 5}, {9, 9}});
  ThresholdConfig zero;
  zero.merge_gap = 0;
  CHECK(spans(merge_adjacent(Flags{3, 5, 6}, zero)) == std::vector<StepSpan>{{3, 3}, {5, 6}});
  for (const auto& e : merge_adjacent(Flags{1, 2})) CHECK(e.method == Method::threshold_merged);
}

TEST_CASE("merged events keep the largest score") {
  const std::vector<double> y{0, 30, 90, 90, 90, 90, 130};
  const auto merged = merge_adjacent(threshold_events(y));
  REQUIRE(merged.size() == 2);
  CHECK(merged[0].span() == StepSpan{1, 2});
  CHECK(merged[0].score == doctest::Approx(60.0 / 180.0));
  CHECK(merged[1].span() == StepSpan{6, 6});
}

TEST_CASE("merge properties on random flags") {
  Rng rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    const auto flags = random_flags(rng, 2 + rng.below(60));
    ThresholdConfig cfg;
    cfg.merge_gap = rng.below(4);
    const auto ev = merge_adjacent(flags, cfg);

    CHECK(spans(ev) == merge_oracle(flags, cfg.merge_gap));
    CHECK(ev.size() <= flags.size());

    // every flag in exactly one event; event ends are flags
    const std::set<std::size_t> fs(flags.begin(), flags.end());
    for (std::size_t f : flags) {
      int hits = 0;
      for (const auto& e : ev) hits += (e.first_step <= f && f <= e.last_step) ? 1 : 0;
      CHECK(hits == 1);
    }
    for (std::size_t i = 0; i < ev.size(); ++i) {
      CHECK(fs.count(ev[i].first_step) == 1);
      CHECK(fs.count(ev[i].last_step) == 1);
      if (i > 0) CHECK(ev[i - 1].last_step < ev[i].first_step);
    }

    // idempotent on the reconstructed flags
    Flags again;
    for (const auto& e : ev)
      for (std::size_t s = e.first_step; s <= e.last_step; ++s) again.push_back(s);
    CHECK(spans(merge_adjacent(again, cfg)) == spans(ev));

    // coverage: an interval hit by a flag is hit by an event
    for (int q = 0; q < 10; ++q) {
      const std::size_t a = rng.below(60), b = a + rng.below(8);
      bool flag_hit = false, event_hit = false;
      for (std::size_t f : flags) flag_hit |= (a <= f && f <= b);
      for (const auto& e : ev) event_hit |= (e.first_step <= b && a <= e.last_step);
      if (flag_hit) CHECK(event_hit);
    }
  }
}
