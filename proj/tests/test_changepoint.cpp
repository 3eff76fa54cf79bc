#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "turnkit/changepoint.hpp"
#include "turnkit/error.hpp"
#include "turnkit/rng.hpp"

using namespace turnkit;

namespace {

struct Best {
  double cost = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> cps;
};

// Enumerates every segmentation with segments of length >= m. The running
// total adds (cost + beta) per segment left to right.
void exhaustive(const SegmentCost& c, std::size_t start, std::size_t n, std::size_t m, double beta, double acc,
                std::vector<std::size_t>& cps, Best& best) {
  for (std::size_t end = start + m; end <= n; ++end) {
    if (end < n && n - end < m) continue;
    const double total = acc + c(start, end - 1) + beta;
    if (end == n) {
      if (total < best.cost) {
        best.cost = total;
        best.cps = cps;
      }
    } else {
      cps.push_back(end);
      exhaustive(c, end, n, m, beta, total, cps, best);
      cps.pop_back();
    }
  }
}

Best exhaustive(std::span<const double> x, std::size_t m, double beta) {
  const SegmentCost c(x);
  Best best;
  std::vector<std::size_t> cps;
  exhaustive(c, 0, x.size(), m, beta, 0.0, cps, best);
  return best;
}

std::vector<double> random_series(Rng& rng, std::size_t n) {
  std::vector<double> x(n);
  const bool shifts = rng.uniform() < 0.5;
  double level = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (shifts && rng.uniform() < 0.25) level = rng.uniform(-10.0, 10.0);
    x[i] = level + rng.normal(0.0, 1.0);
  }
  return x;
}

double naive_cost(std::span<const double> x, std::size_t a, std::size_t b) {
  double mean = 0;
  for (std::size_t i = a; i <= b; ++i) mean += x[i];
  mean /= static_cast<double>(b - a + 1);
  double s = 0;
  for (std::size_t i = a; i <= b; ++i) s += (x[i] - mean) * (x[i] - mean);
  return s;
}

}  // namespace

TEST_CASE("segment cost examples") {
  const std::vector<double> c{4, 4, 4, 4};
  CHECK(segment_cost(c, 0, 3) == 0.0);
  const std::vector<double> x{0, 0, 6, 6};
  CHECK(segment_cost(x, 0, 3) == doctest::Approx(36.0));
  CHECK(segment_cost(x, 2, 2) == 0.0);
  CHECK(segment_cost(x, 1, 2) == doctest::Approx(18.0));
}

TEST_CASE("segment cost agrees with the two-pass formula") {
  Rng rng(5);
  std::vector<double> x(200);
  for (auto& v : x) v = rng.normal(100.0, 30.0);
  const SegmentCost c(x);
  for (int k = 0; k < 500; ++k) {
    const std::size_t a = rng.below(200);
    const std::size_t b = a + rng.below(200 - a);
    CHECK(c(a, b) == doctest::Approx(naive_cost(x, a, b)).epsilon(1e-9).scale(1.0));
    CHECK(c(a, b) >= 0.0);
  }
}

TEST_CASE("pelt examples") {
  PeltConfig cfg;
  cfg.penalty_beta = 1.0;
  const std::vector<double> flat(20, 3.0);
  CHECK(pelt(flat, cfg).change_points.empty());

  std::vector<double> step(20, 0.0);
  for (std::size_t i = 10; i < 20; ++i) step[i] = 5.0;
  CHECK(pelt(step, cfg).change_points == std::vector<std::size_t>{10});
  CHECK(exhaustive(step, cfg.min_segment, 1.0).cps == std::vector<std::size_t>{10});

  cfg.penalty_beta = std::numeric_limits<double>::infinity();
  CHECK(pelt(step, cfg).change_points.empty());
}

TEST_CASE("pelt input checks") {
  PeltConfig cfg;
  const std::vector<double> three{1, 2, 3};
  CHECK_THROWS_AS(pelt(three, cfg), Error);
  cfg.min_segment = 0;
  const std::vector<double> ten(10, 0.0);
  CHECK_THROWS_AS(pelt(ten, cfg), Error);
}

TEST_CASE("pelt equals exhaustive search") {
  Rng rng(1234);
  for (int trial = 0; trial < 300; ++trial) {
    PeltConfig cfg;
    cfg.min_segment = 1 + rng.below(3);
    const std::size_t n = 2 * cfg.min_segment + rng.below(13 - 2 * cfg.min_segment);
    const auto x = random_series(rng, n);
    cfg.penalty_beta = rng.uniform(0.0, 20.0);
    const auto got = pelt(x, cfg);
    const auto want = exhaustive(x, cfg.min_segment, cfg.penalty_beta);
    CHECK(got.total_cost == want.cost);
    CHECK(penalized_cost(SegmentCost(x), got.change_points, cfg.penalty_beta) == want.cost);
  }
}

TEST_CASE("pruning does not change the answer") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = random_series(rng, 30 + rng.below(300));
    PeltConfig on;
    on.min_segment = 1 + rng.below(4);
    PeltConfig off = on;
    off.prune = false;
    const auto a = pelt(x, on);
    const auto b = pelt(x, off);
    CHECK(a.change_points == b.change_points);
    CHECK(a.total_cost == b.total_cost);
  }
}

TEST_CASE("change point count is non-increasing in beta") {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = random_series(rng, 150);
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (double beta : {0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 1000.0, 1e6}) {
      PeltConfig cfg;
      cfg.penalty_beta = beta;
      const auto k = pelt(x, cfg).change_points.size();
      CHECK(k <= prev);
      prev = k;
    }
  }
}

TEST_CASE("default penalty from the MAD noise estimate") {
  Rng rng(8);
  std::vector<double> x(5000);
  for (auto& v : x) v = rng.normal(0.0, 2.0);
  CHECK(mad_sigma(x) == doctest::Approx(2.0).epsilon(0.05));
  CHECK(default_penalty(x) == doctest::Approx(2.0 * mad_sigma(x) * mad_sigma(x) * std::log(5000.0)));
  PeltConfig cfg;
  const auto r = pelt(x, cfg);
  CHECK(r.beta == default_penalty(x));
  CHECK(r.change_points.size() <= 2);
}

TEST_CASE("detect_pelt spans and overlaps") {
  std::vector<double> yaw(40, 0.0);
  for (std::size_t i = 20; i < 40; ++i) yaw[i] = 90.0;
  PeltConfig cfg;
  cfg.penalty_beta = 100.0;
  PeltDiagnostics diag;
  const auto ev = detect_pelt(yaw, cfg, &diag);
  REQUIRE(ev.size() == 1);
  CHECK(diag.change_points == std::vector<std::size_t>{20});
  CHECK(ev[0].first_step == 19);
  CHECK(ev[0].last_step == 21);
  CHECK(ev[0].score == doctest::Approx(0.5));
  CHECK(ev[0].method == Method::pelt);

  // a turn across the wrap is one shift on the unwrapped series
  std::vector<double> wrapped(40, 170.0);
  for (std::size_t i = 20; i < 40; ++i) wrapped[i] = -100.0;
  const auto w = detect_pelt(wrapped, cfg);
  REQUIRE(w.size() == 1);
  CHECK(w[0].score == doctest::Approx(90.0 / 180.0));

  // two change points two steps apart share a span
  std::vector<double> close(40, 0.0);
  for (std::size_t i = 20; i < 22; ++i) close[i] = 45.0;
  for (std::size_t i = 22; i < 40; ++i) close[i] = 90.0;
  PeltDiagnostics d2;
  const auto c = detect_pelt(close, cfg, &d2);
  CHECK(d2.change_points == std::vector<std::size_t>{20, 22});
  REQUIRE(c.size() == 1);
  CHECK(c[0].first_step == 19);
  CHECK(c[0].last_step == 23);
  CHECK(d2.overlaps == 1);
}

TEST_CASE("fuse_events examples") {
  const std::vector<TurnEvent> p{{9, 11, Method::pelt, 0.4}};
  const std::vector<double> scores(30, 0.3);

  const auto disjoint = fuse_events(p, std::vector<std::size_t>{25}, scores);
  REQUIRE(disjoint.size() == 2);
  CHECK(disjoint[0].span() == StepSpan{9, 11});
  CHECK(disjoint[1].span() == StepSpan{25, 25});
  for (const auto& e : disjoint) CHECK(e.method == Method::pelt_if);

  const auto merged = fuse_events(p, std::vector<std::size_t>{10}, scores);
  REQUIRE(merged.size() == 1);
  CHECK(merged[0].span() == StepSpan{9, 11});
  CHECK(merged[0].score == doctest::Approx(0.4));

  const std::vector<TurnEvent> three{{1, 3, Method::pelt, 0.1}, {9, 11, Method::pelt, 0.2}, {20, 22, Method::pelt, 0.3}};
  CHECK(fuse_events(three, std::vector<std::size_t>{}, scores).size() == 3);
}
