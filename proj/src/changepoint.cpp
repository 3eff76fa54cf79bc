#include "turnkit/changepoint.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <numeric>

#include "turnkit/angles.hpp"
#include "turnkit/error.hpp"
#include "turnkit/rng.hpp"

namespace turnkit {

SegmentCost::SegmentCost(std::span<const double> series)
    : sum_(series.size() + 1, 0.0), sum_sq_(series.size() + 1, 0.0) {
  // centring keeps the prefix sums small and the subtraction well conditioned
  const double centre =
      series.empty() ? 0.0 : std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double v = series[i] - centre;
    sum_[i + 1] = sum_[i] + v;
    sum_sq_[i + 1] = sum_sq_[i] + v * v;
  }
}

double segment_cost(std::span<const double> series, std::size_t a, std::size_t b) {
  if (a > b || b >= series.size()) fail(ErrorKind::invalid_argument, "segment bounds out of range");
  return SegmentCost(series)(a, b);
}

namespace {

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  return m;
}

}  // namespace

double mad_sigma(std::span<const double> series) {
  if (series.size() < 3) return 0.0;
  std::vector<double> d;
  d.reserve(series.size() - 1);
  for (std::size_t i = 1; i < series.size(); ++i) d.push_back(series[i] - series[i - 1]);
  const double med = median_of(d);
  for (auto& v : d) v = std::abs(v - med);
  // differences of i.i.d. noise have variance 2 sigma^2
  return 1.4826 * median_of(std::move(d)) / std::sqrt(2.0);
}

double default_penalty(std::span<const double> series) {
  if (series.size() < 2) return 0.0;
  const double s = mad_sigma(series);
  return 2.0 * s * s * std::log(static_cast<double>(series.size()));
}

double penalized_cost(const SegmentCost& cost, std::span<const std::size_t> change_points, double beta) {
  double acc = 0.0;
  std::size_t prev = 0;
  for (std::size_t i = 0; i <= change_points.size(); ++i) {
    const std::size_t end = i < change_points.size() ? change_points[i] : cost.size();
    const double with_cost = acc + cost(prev, end - 1);
    acc = with_cost + beta;
    prev = end;
  }
  return acc;
}

PeltResult pelt(std::span<const double> series, const PeltConfig& cfg) {
  const std::size_t n = series.size();
  const std::size_t m = cfg.min_segment;
  if (m < 1) fail(ErrorKind::invalid_argument, "min_segment must be >= 1");
  if (n < 2 * m)
    fail(ErrorKind::insufficient_data, fmt::format("PELT needs at least {} samples, got {}", 2 * m, n));
  const double beta = cfg.penalty_beta < 0.0 ? default_penalty(series) : cfg.penalty_beta;
  if (std::isnan(beta)) fail(ErrorKind::invalid_argument, "penalty is NaN");

  const SegmentCost cost(series);
  PeltResult result;
  result.beta = beta;
  if (std::isinf(beta)) {
    result.total_cost = beta;
    return result;
  }

  constexpr std::size_t kNever = static_cast<std::size_t>(-1);
  constexpr double kInf = std::numeric_limits<double>::infinity();

  std::vector<double> best(n + 1, 0.0);
  std::vector<std::size_t> last(n + 1, 0);
  // Live candidates. A dominated candidate is not dropped at once: it stays
  // until t + m, when the split that dominates it becomes usable.
  std::vector<std::size_t> cand{0}, expires{kNever};
  // position, best[s] and the prefix sums at s, cached so the hot loop vectorises
  std::vector<double> pos{0.0}, base{0.0}, psum{cost.prefix_sum(0)}, psq{cost.prefix_sq(0)};
  std::vector<double> value;
  std::size_t next_expiry = kNever;

  // The prune test of step t - 1 runs at the start of step t, and only when
  // some candidate actually exceeded the bound.
  double prev_bound = kInf;
  double prev_max = -kInf;
  std::size_t prev_t = 0;
  for (std::size_t t = m; t <= n; ++t) {
    if (prev_max > prev_bound) {
      for (std::size_t i = 0; i < cand.size(); ++i) {
        if (expires[i] == kNever && value[i] > prev_bound) {
          expires[i] = prev_t + m;
          next_expiry = std::min(next_expiry, expires[i]);
        }
      }
    }
    if (next_expiry <= t) {
      std::size_t k = 0;
      next_expiry = kNever;
      for (std::size_t i = 0; i < cand.size(); ++i) {
        if (expires[i] <= t) continue;
        cand[k] = cand[i];
        expires[k] = expires[i];
        pos[k] = pos[i];
        base[k] = base[i];
        psum[k] = psum[i];
        psq[k] = psq[i];
        next_expiry = std::min(next_expiry, expires[i]);
        ++k;
      }
      cand.resize(k);
      expires.resize(k);
      pos.resize(k);
      base.resize(k);
      psum.resize(k);
      psq.resize(k);
    }
    if (t >= 2 * m) {
      const std::size_t s = t - m;
      cand.push_back(s);
      expires.push_back(kNever);
      pos.push_back(static_cast<double>(s));
      base.push_back(best[s]);
      psum.push_back(cost.prefix_sum(s));
      psq.push_back(cost.prefix_sq(s));
    }

    const std::size_t k = cand.size();
    const double sum_t = cost.prefix_sum(t), sq_t = cost.prefix_sq(t), td = static_cast<double>(t);
    value.resize(k);
    for (std::size_t i = 0; i < k; ++i)
      value[i] = base[i] + SegmentCost::combine(psum[i], psq[i], sum_t, sq_t, td - pos[i]);
    std::size_t arg = 0;
    double high = value[0];
    for (std::size_t i = 1; i < k; ++i) {
      if (value[i] < value[arg]) arg = i;
      high = std::max(high, value[i]);
    }
    const double low = value[arg];
    best[t] = low + beta;
    last[t] = cand[arg];

    if (cfg.prune) {
      const double bound = low + beta;
      prev_bound = bound + 1e-10 * std::max(1.0, std::abs(bound));
      prev_max = high;
      prev_t = t;
    }
  }

  for (std::size_t t = n; last[t] > 0; t = last[t]) result.change_points.push_back(last[t]);
  std::reverse(result.change_points.begin(), result.change_points.end());
  result.total_cost = best[n];
  return result;
}

// ---- isolation forest ----

void ForestParams::validate() const {
  if (subsample_size < 1) fail(ErrorKind::invalid_argument, "subsample size must be >= 1");
  if (tree_count < 1) fail(ErrorKind::invalid_argument, "tree count must be >= 1");
  if (!(contamination > 0.0 && contamination < 0.5))
    fail(ErrorKind::invalid_argument, "contamination must lie in (0, 0.5)");
}

std::size_t IsolationTree::depth() const {
  std::vector<std::size_t> d(left.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < left.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (left[i] >= 0) {
      d[static_cast<std::size_t>(left[i])] = d[i] + 1;
      d[static_cast<std::size_t>(right[i])] = d[i] + 1;
    }
  }
  return deepest;
}

double average_path_length(std::size_t n) {
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  const double m = static_cast<double>(n - 1);
  double h = 0.0;
  if (n < 100000) {
    for (std::size_t i = n - 1; i >= 1; --i) h += 1.0 / static_cast<double>(i);
  } else {
    h = std::log(m) + 0.57721566490153286 + 1.0 / (2.0 * m) - 1.0 / (12.0 * m * m);
  }
  return 2.0 * h - 2.0 * m / static_cast<double>(n);
}

double isolation_score(double mean_path, std::size_t subsample_size) {
  const double c = average_path_length(subsample_size);
  if (c <= 0.0) return 0.5;
  return std::exp2(-mean_path / c);
}

namespace {

std::size_t depth_limit(std::size_t psi) {
  std::size_t l = 0;
  while ((std::size_t{1} << l) < psi) ++l;
  return l;
}

IsolationTree build_tree(std::span<const std::vector<double>> points, std::size_t dim, std::size_t psi, Rng& rng) {
  const std::size_t n = points.size();
  std::vector<std::size_t> idx;
  if (psi <= n) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t i = 0; i < psi; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(all[i], all[j]);
    }
    idx.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(psi));
  } else {
    for (std::size_t i = 0; i < psi; ++i) idx.push_back(static_cast<std::size_t>(rng.below(n)));
  }

  IsolationTree tree;
  const std::size_t limit = depth_limit(psi);
  struct Work {
    std::size_t node, begin, end, depth;
  };
  auto add_node = [&tree](std::size_t size) {
    tree.split_dim.push_back(-1);
    tree.split_value.push_back(0.0);
    tree.left.push_back(-1);
    tree.right.push_back(-1);
    tree.size.push_back(static_cast<int>(size));
    return tree.left.size() - 1;
  };
  std::vector<Work> stack{{add_node(idx.size()), 0, idx.size(), 0}};
  std::vector<std::size_t> splittable;
  while (!stack.empty()) {
    const Work w = stack.back();
    stack.pop_back();
    if (w.depth >= limit || w.end - w.begin <= 1) continue;

    splittable.clear();
    std::vector<double> lo(dim), hi(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      lo[d] = hi[d] = points[idx[w.begin]][d];
      for (std::size_t k = w.begin + 1; k < w.end; ++k) {
        lo[d] = std::min(lo[d], points[idx[k]][d]);
        hi[d] = std::max(hi[d], points[idx[k]][d]);
      }
      if (hi[d] > lo[d]) splittable.push_back(d);
    }
    if (splittable.empty()) continue;

    const std::size_t d = splittable[static_cast<std::size_t>(rng.below(splittable.size()))];
    // value in (lo, hi] keeps both children non-empty under the x < value rule
    double value = lo[d] + (hi[d] - lo[d]) * (1.0 - rng.uniform());
    if (!(value > lo[d])) value = hi[d];
    const auto mid_it = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(w.begin),
                                       idx.begin() + static_cast<std::ptrdiff_t>(w.end),
                                       [&](std::size_t i) { return points[i][d] < value; });
    const std::size_t mid = static_cast<std::size_t>(mid_it - idx.begin());

    tree.split_dim[w.node] = static_cast<int>(d);
    tree.split_value[w.node] = value;
    const std::size_t l = add_node(mid - w.begin);
    const std::size_t r = add_node(w.end - mid);
    tree.left[w.node] = static_cast<int>(l);
    tree.right[w.node] = static_cast<int>(r);
    stack.push_back({r, mid, w.end, w.depth + 1});
    stack.push_back({l, w.begin, mid, w.depth + 1});
  }
  return tree;
}

}  // namespace

IsolationForestModel fit_iforest(std::span<const std::vector<double>> points, const ForestParams& params) {
  params.validate();
  if (points.size() < 2) fail(ErrorKind::insufficient_data, "isolation forest needs at least 2 points");
  const std::size_t dim = points[0].size();
  if (dim == 0) fail(ErrorKind::invalid_argument, "points have no dimensions");
  for (const auto& p : points) {
    if (p.size() != dim) fail(ErrorKind::invalid_argument, "points differ in dimension");
    for (const double v : p)
      if (!std::isfinite(v)) fail(ErrorKind::invalid_argument, "points must be finite");
  }

  IsolationForestModel model;
  model.params = params;
  model.dim = dim;
  model.degenerate = std::all_of(points.begin(), points.end(), [&](const auto& p) { return p == points[0]; });
  if (model.degenerate) return model;

  model.trees.reserve(params.tree_count);
  for (std::size_t k = 0; k < params.tree_count; ++k) {
    Rng rng(derive_seed(params.seed, k));
    model.trees.push_back(build_tree(points, dim, params.subsample_size, rng));
  }
  return model;
}

IsolationForestModel fit_iforest(std::span<const StepFeature> points, const ForestParams& params) {
  std::vector<std::vector<double>> rows;
  rows.reserve(points.size());
  for (const auto& p : points) rows.emplace_back(p.begin(), p.end());
  return fit_iforest(std::span<const std::vector<double>>(rows), params);
}

double IsolationForestModel::path_length(std::span<const double> x) const {
  if (x.size() != dim) fail(ErrorKind::invalid_argument, "query dimension differs from the forest");
  if (trees.empty()) return average_path_length(params.subsample_size);
  double total = 0.0;
  for (const auto& tree : trees) {
    std::size_t node = 0;
    double h = 0.0;
    while (tree.left[node] >= 0) {
      const auto d = static_cast<std::size_t>(tree.split_dim[node]);
      node = static_cast<std::size_t>(x[d] < tree.split_value[node] ? tree.left[node] : tree.right[node]);
      h += 1.0;
    }
    if (tree.size[node] > 1) h += average_path_length(static_cast<std::size_t>(tree.size[node]));
    total += h;
  }
  return total / static_cast<double>(trees.size());
}

double IsolationForestModel::score(std::span<const double> x) const {
  if (degenerate) return 0.5;
  return isolation_score(path_length(x), params.subsample_size);
}

double iforest_score(const IsolationForestModel& model, std::span<const double> x) { return model.score(x); }

std::vector<std::size_t> contamination_flags(std::span<const double> scores, double contamination) {
  const std::size_t n = scores.size();
  const double raw = std::ceil(contamination * static_cast<double>(n) - 1e-9);
  const std::size_t k = std::min(n, static_cast<std::size_t>(std::max(0.0, raw)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

std::string write_forest_json(const IsolationForestModel& model) {
  nlohmann::ordered_json j;
  j["seed"] = model.params.seed;
  j["subsample_size"] = model.params.subsample_size;
  j["tree_count"] = model.params.tree_count;
  j["contamination"] = model.params.contamination;
  j["dim"] = model.dim;
  j["degenerate"] = model.degenerate;
  auto trees = nlohmann::ordered_json::array();
  for (const auto& t : model.trees) {
    nlohmann::ordered_json o;
    o["split_dim"] = t.split_dim;
    o["split_value"] = t.split_value;
    o["left"] = t.left;
    o["right"] = t.right;
    o["size"] = t.size;
    trees.push_back(std::move(o));
  }
  j["trees"] = std::move(trees);
  return j.dump() + "\n";
}

IsolationForestModel parse_forest_json(const std::string& text) {
  IsolationForestModel m;
  try {
    const auto j = nlohmann::json::parse(text);
    m.params.seed = j.at("seed").get<std::uint64_t>();
    m.params.subsample_size = j.at("subsample_size").get<std::size_t>();
    m.params.tree_count = j.at("tree_count").get<std::size_t>();
    m.params.contamination = j.at("contamination").get<double>();
    m.dim = j.at("dim").get<std::size_t>();
    m.degenerate = j.value("degenerate", false);
    for (const auto& o : j.at("trees")) {
      IsolationTree t;
      t.split_dim = o.at("split_dim").get<std::vector<int>>();
      t.split_value = o.at("split_value").get<std::vector<double>>();
      t.left = o.at("left").get<std::vector<int>>();
      t.right = o.at("right").get<std::vector<int>>();
      t.size = o.at("size").get<std::vector<int>>();
      const std::size_t nodes = t.left.size();
      if (t.split_dim.size() != nodes || t.split_value.size() != nodes || t.right.size() != nodes ||
          t.size.size() != nodes || nodes == 0)
        fail(ErrorKind::schema, "forest tree arrays differ in length");
      for (std::size_t i = 0; i < nodes; ++i) {
        const bool leaf = t.left[i] < 0;
        if (leaf != (t.right[i] < 0)) fail(ErrorKind::schema, "forest node with a single child");
        if (!leaf && (static_cast<std::size_t>(t.left[i]) >= nodes || static_cast<std::size_t>(t.right[i]) >= nodes ||
                      t.left[i] <= static_cast<int>(i) || t.right[i] <= static_cast<int>(i) || t.split_dim[i] < 0 ||
                      static_cast<std::size_t>(t.split_dim[i]) >= m.dim))
          fail(ErrorKind::schema, "forest node references out of range");
      }
      m.trees.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::parse, std::string("forest JSON: ") + ex.what());
  }
  m.params.validate();
  return m;
}

// ---- detectors ----

std::vector<TurnEvent> detect_pelt(std::span<const double> yaw, const PeltConfig& cfg, PeltDiagnostics* diag) {
  const auto series = unwrap_deg(yaw);
  const auto res = pelt(series, cfg);
  const std::size_t n = series.size();
  const std::size_t reach = cfg.min_segment - 1;

  std::vector<TurnEvent> events;
  std::size_t overlaps = 0;
  std::size_t prev = 0;
  for (std::size_t i = 0; i < res.change_points.size(); ++i) {
    const std::size_t cp = res.change_points[i];
    const std::size_t next = i + 1 < res.change_points.size() ? res.change_points[i + 1] : n;
    const double before = std::accumulate(series.begin() + static_cast<std::ptrdiff_t>(prev),
                                          series.begin() + static_cast<std::ptrdiff_t>(cp), 0.0) /
                          static_cast<double>(cp - prev);
    const double after = std::accumulate(series.begin() + static_cast<std::ptrdiff_t>(cp),
                                         series.begin() + static_cast<std::ptrdiff_t>(next), 0.0) /
                         static_cast<double>(next - cp);
    const double score = std::min(1.0, std::abs(after - before) / 180.0);
    TurnEvent e{cp >= reach ? cp - reach : 0, std::min(n - 1, cp + reach), Method::pelt, score};
    if (!events.empty() && e.first_step <= events.back().last_step) {
      events.back().last_step = std::max(events.back().last_step, e.last_step);
      events.back().score = std::max(events.back().score, e.score);
      ++overlaps;
    } else {
      events.push_back(e);
    }
    prev = cp;
  }
  if (diag != nullptr) {
    diag->change_points = res.change_points;
    diag->overlaps = overlaps;
    diag->beta = res.beta;
  }
  return events;
}

std::vector<TurnEvent> fuse_events(std::span<const TurnEvent> pelt_events, std::span<const std::size_t> if_flags,
                                   std::span<const double> if_scores) {
  std::vector<TurnEvent> all(pelt_events.begin(), pelt_events.end());
  for (const auto f : if_flags) all.push_back({f, f, Method::pelt_if, f < if_scores.size() ? if_scores[f] : 1.0});
  std::stable_sort(all.begin(), all.end(),
                   [](const TurnEvent& a, const TurnEvent& b) { return a.first_step < b.first_step; });
  std::vector<TurnEvent> out;
  for (auto e : all) {
    e.method = Method::pelt_if;
    if (!out.empty() && e.first_step <= out.back().last_step) {
      out.back().last_step = std::max(out.back().last_step, e.last_step);
      out.back().score = std::max(out.back().score, e.score);
    } else {
      out.push_back(e);
    }
  }
  return out;
}

FusionResult detect_pelt_if(std::span<const double> yaw, std::span<const StepFeature> features,
                            const PeltConfig& pelt_cfg, const ForestParams& forest) {
  if (features.size() != yaw.size()) fail(ErrorKind::invalid_argument, "one feature vector is required per step");
  FusionResult out;
  const auto pelt_events = detect_pelt(yaw, pelt_cfg, &out.pelt);
  const auto model = fit_iforest(features, forest);
  out.scores.reserve(features.size());
  for (const auto& f : features) out.scores.push_back(model.score(f));
  out.if_flags = contamination_flags(out.scores, forest.contamination);
  out.events = fuse_events(pelt_events, out.if_flags, out.scores);
  return out;
}

}  // namespace turnkit
