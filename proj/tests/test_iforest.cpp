#include <doctest.h>

#include <cmath>
#include <vector>

#include "turnkit/changepoint.hpp"
#include "turnkit/error.hpp"
#include "turnkit/rng.hpp"

using namespace turnkit;

namespace {

using Points = std::vector<std::vector<double>>;

Points gaussian_with_outlier(std::uint64_t seed, std::size_t n = 256) {
  Rng rng(seed);
  Points pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back({rng.normal(0.0, 1.0), rng.normal(0.0, 1.0)});
  pts.push_back({10.0, 10.0});
  return pts;
}

double harmonic(std::size_t n) {
  double h = 0;
  for (std::size_t i = 1; i <= n; ++i) h += 1.0 / static_cast<double>(i);
  return h;
}

}  // namespace

TEST_CASE("average path length") {
  CHECK(average_path_length(1) == 0.0);
  CHECK(average_path_length(2) == 1.0);
  CHECK(average_path_length(3) == doctest::Approx(2.0 * 1.5 - 2.0 * 2.0 / 3.0));
  for (std::size_t n : {4, 10, 256, 1000})
    CHECK(average_path_length(n) ==
          doctest::Approx(2.0 * harmonic(n - 1) - 2.0 * static_cast<double>(n - 1) / static_cast<double>(n)));
  // asymptotic branch agrees with the exact sum
  CHECK(average_path_length(100000) == doctest::Approx(2.0 * harmonic(99999) - 2.0 * 99999.0 / 100000.0).epsilon(1e-12));
}

TEST_CASE("score fixed points") {
  for (std::size_t psi : {2, 16, 256}) {
    const double c = average_path_length(psi);
    CHECK(isolation_score(c, psi) == 0.5);
    CHECK(isolation_score(0.0, psi) == 1.0);
    CHECK(isolation_score(2.0 * c, psi) == 0.25);
  }
}

TEST_CASE("scores lie in (0, 1) and decrease with path length") {
  Rng rng(21);
  Points pts;
  for (int i = 0; i < 500; ++i) pts.push_back({rng.normal(0.0, 1.0), rng.uniform(-3.0, 3.0), rng.normal(5.0, 0.1)});
  ForestParams p;
  p.seed = 4;
  const auto model = fit_iforest(pts, p);
  for (int i = 0; i < 2000; ++i) {
    const std::vector<double> q{rng.normal(0.0, 4.0), rng.normal(0.0, 4.0), rng.normal(5.0, 4.0)};
    const double s = model.score(q);
    CHECK(s > 0.0);
    CHECK(s < 1.0);
  }
  double prev = 1.0;
  for (double h = 0.5; h < 30.0; h += 0.5) {
    const double s = isolation_score(h, 256);
    CHECK(s < prev);
    prev = s;
  }
}

TEST_CASE("two points give one split") {
  const Points pts{{0.0, 0.0}, {1.0, 5.0}};
  ForestParams p;
  p.tree_count = 1;
  p.subsample_size = 2;
  const auto m = fit_iforest(pts, p);
  REQUIRE(m.trees.size() == 1);
  const auto& t = m.trees[0];
  CHECK(t.depth() == 1);
  CHECK(t.left.size() == 3);
  CHECK(t.size[1] == 1);
  CHECK(t.size[2] == 1);
  CHECK(m.path_length(pts[0]) == 1.0);
  CHECK(m.path_length(pts[1]) == 1.0);
}

TEST_CASE("fitting is deterministic per seed") {
  const auto pts = gaussian_with_outlier(3);
  ForestParams p;
  p.seed = 17;
  const auto a = fit_iforest(pts, p);
  const auto b = fit_iforest(pts, p);
  REQUIRE(a.trees.size() == b.trees.size());
  for (std::size_t i = 0; i < a.trees.size(); ++i) CHECK(a.trees[i] == b.trees[i]);
  p.seed = 18;
  const auto c = fit_iforest(pts, p);
  bool differs = false;
  for (std::size_t i = 0; i < a.trees.size(); ++i) differs |= !(a.trees[i] == c.trees[i]);
  CHECK(differs);
}

TEST_CASE("depth is capped at ceil(log2 psi)") {
  const auto pts = gaussian_with_outlier(5, 2000);
  for (std::size_t psi : {2, 3, 64, 100, 256, 257}) {
    ForestParams p;
    p.subsample_size = psi;
    p.tree_count = 20;
    const auto m = fit_iforest(pts, p);
    const auto cap = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(psi))));
    for (const auto& t : m.trees) {
      CHECK(t.depth() <= cap);
      CHECK(t.size[0] == static_cast<int>(psi));
    }
  }
}

TEST_CASE("planted outlier scores highest") {
  int top = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pts = gaussian_with_outlier(seed);
    ForestParams p;
    p.seed = seed;
    const auto m = fit_iforest(pts, p);
    const double s_out = m.score(pts.back());
    bool best = true;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) best &= m.score(pts[i]) < s_out;
    top += best ? 1 : 0;
  }
  CHECK(top >= 19);
}

TEST_CASE("contamination flags the top scores") {
  const std::vector<double> s{0.1, 0.9, 0.5, 0.9, 0.2, 0.3, 0.7, 0.4, 0.6, 0.8};
  CHECK(contamination_flags(s, 0.05) == std::vector<std::size_t>{1});
  CHECK(contamination_flags(s, 0.2) == std::vector<std::size_t>{1, 3});
  CHECK(contamination_flags(s, 0.25) == std::vector<std::size_t>{1, 3, 9});
  for (std::size_t n : {1, 19, 20, 21, 257, 1000}) {
    std::vector<double> x(n, 0.5);
    CHECK(contamination_flags(x, 0.05).size() == static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(n))));
  }
  // ties go to the lower index
  const std::vector<double> tie{0.5, 0.5, 0.5, 0.5};
  CHECK(contamination_flags(tie, 0.3) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("identical points make a degenerate model") {
  const Points same(50, std::vector<double>{1.0, 2.0});
  const auto m = fit_iforest(same, ForestParams{});
  CHECK(m.degenerate);
  CHECK(m.score(same[0]) == 0.5);
  CHECK(m.score(std::vector<double>{9.0, 9.0}) == 0.5);
}

TEST_CASE("forest parameter and input checks") {
  const Points one{{1.0}};
  CHECK_THROWS_AS(fit_iforest(one, ForestParams{}), Error);
  ForestParams bad;
  bad.contamination = 0.5;
  const Points two{{1.0}, {2.0}};
  CHECK_THROWS_AS(fit_iforest(two, bad), Error);
  const Points ragged{{1.0}, {2.0, 3.0}};
  CHECK_THROWS_AS(fit_iforest(ragged, ForestParams{}), Error);
}

TEST_CASE("forest JSON round trip") {
  const auto pts = gaussian_with_outlier(2, 100);
  ForestParams p;
  p.seed = 77;
  p.tree_count = 10;
  const auto m = fit_iforest(pts, p);
  const auto back = parse_forest_json(write_forest_json(m));
  CHECK(back.trees.size() == m.trees.size());
  for (std::size_t i = 0; i < m.trees.size(); ++i) CHECK(back.trees[i] == m.trees[i]);
  for (const auto& q : pts) CHECK(back.score(q) == m.score(q));
  CHECK_THROWS_AS(parse_forest_json("{\"seed\": 1}"), Error);
}

TEST_CASE("fusion covers PELT and adds IF flags") {
  Rng rng(6);
  std::vector<double> yaw(120, 0.0);
  std::vector<StepFeature> feats(120);
  for (std::size_t i = 0; i < 120; ++i) {
    yaw[i] = (i < 60 ? 0.0 : 90.0) + rng.normal(0.0, 1.0);
    for (std::size_t d = 0; d < kFeatureDim; ++d) feats[i][d] = rng.normal(0.0, 1.0);
  }
  for (std::size_t d = 0; d < kFeatureDim; ++d) feats[30][d] = 25.0;

  ForestParams fp;
  fp.seed = 1;
  const auto res = detect_pelt_if(yaw, feats, PeltConfig{}, fp);
  const auto pelt_only = detect_pelt(yaw, PeltConfig{});
  CHECK(res.if_flags.size() == 6);
  bool saw30 = false;
  for (auto f : res.if_flags) saw30 |= f == 30;
  CHECK(saw30);
  for (const auto& p : pelt_only) {
    bool covered = false;
    for (const auto& e : res.events) covered |= e.first_step <= p.first_step && p.last_step <= e.last_step;
    CHECK(covered);
  }
  for (std::size_t i = 1; i < res.events.size(); ++i) CHECK(res.events[i - 1].last_step < res.events[i].first_step);
}
