#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "turnkit/events.hpp"

namespace turnkit {

// L2 segment cost over a fixed series, O(1) per query after O(n) setup.
class SegmentCost {
public:
  explicit SegmentCost(std::span<const double> series);

  // Sum over i in [a, b] (inclusive) of (x_i - mean)^2.
  double operator()(std::size_t a, std::size_t b) const {
    return combine(sum_[a], sum_sq_[a], sum_[b + 1], sum_sq_[b + 1], static_cast<double>(b - a + 1));
  }

  std::size_t size() const { return sum_.size() - 1; }

  // Raw pieces of the cost, for callers that batch many queries sharing an end:
  // cost(a, b) == combine(prefix_sum(a), prefix_sq(a), prefix_sum(b + 1), prefix_sq(b + 1), b - a + 1).
  double prefix_sum(std::size_t i) const { return sum_[i]; }
  double prefix_sq(std::size_t i) const { return sum_sq_[i]; }
  static double combine(double sum_a, double sq_a, double sum_end, double sq_end, double len) {
    const double s = sum_end - sum_a;
    const double c = (sq_end - sq_a) - s * s / len;
    return std::max(c, 0.0);
  }

private:
  std::vector<double> sum_;
  std::vector<double> sum_sq_;
};

double segment_cost(std::span<const double> series, std::size_t a, std::size_t b);

struct PeltConfig {
  // Negative means "derive from the data": 2 * sigma^2 * ln(n), sigma by MAD.
  double penalty_beta = -1.0;
  std::size_t min_segment = 2;
  bool prune = true;
};

// MAD noise estimate on first differences, scaled for a Gaussian.
double mad_sigma(std::span<const double> series);
double default_penalty(std::span<const double> series);

struct PeltResult {
  std::vector<std::size_t> change_points;  // index of the first sample of each new segment
  double total_cost = 0.0;                 // sum over segments of (cost + beta)
  double beta = 0.0;
};

PeltResult pelt(std::span<const double> series, const PeltConfig& cfg = {});

// Penalized cost of a given segmentation, accumulated segment by segment the
// same way the dynamic program does.
double penalized_cost(const SegmentCost& cost, std::span<const std::size_t> change_points, double beta);

// ---- isolation forest ----

inline constexpr std::size_t kFeatureDim = 9;
using StepFeature = std::array<double, kFeatureDim>;

struct IsolationTree {
  // Flattened nodes. Internal nodes have left/right >= 0; leaves have left == right == -1.
  std::vector<int> split_dim;
  std::vector<double> split_value;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<int> size;  // points reaching the node during fit

  std::size_t depth() const;
  friend bool operator==(const IsolationTree&, const IsolationTree&) = default;
};

struct ForestParams {
  std::size_t subsample_size = 256;
  std::size_t tree_count = 100;
  double contamination = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

struct IsolationForestModel {
  ForestParams params;
  std::size_t dim = kFeatureDim;
  std::vector<IsolationTree> trees;
  bool degenerate = false;

  double path_length(std::span<const double> x) const;  // E(h(x))
  double score(std::span<const double> x) const;
};

// Average unsuccessful-search path length in a BST of n points.
double average_path_length(std::size_t n);

// 2^(-mean_path / c(subsample)).
double isolation_score(double mean_path, std::size_t subsample_size);

// Points are rows of equal dimension.
IsolationForestModel fit_iforest(std::span<const std::vector<double>> points, const ForestParams& params);
IsolationForestModel fit_iforest(std::span<const StepFeature> points, const ForestParams& params);

double iforest_score(const IsolationForestModel& model, std::span<const double> x);

// Indices of the ceil(contamination * n) highest scores, ascending; ties go to the lower index.
std::vector<std::size_t> contamination_flags(std::span<const double> scores, double contamination);

std::string write_forest_json(const IsolationForestModel& model);
IsolationForestModel parse_forest_json(const std::string& text);

// ---- detectors ----

struct PeltDiagnostics {
  std::vector<std::size_t> change_points;
  std::size_t overlaps = 0;  // change points absorbed into a neighbour's span
  double beta = 0.0;
};

// Change points of the (unwrapped) yaw series as events spanning
// cp +/- (min_segment - 1), overlapping spans merged.
std::vector<TurnEvent> detect_pelt(std::span<const double> yaw, const PeltConfig& cfg,
                                   PeltDiagnostics* diag = nullptr);

struct FusionResult {
  std::vector<TurnEvent> events;
  std::vector<std::size_t> if_flags;
  std::vector<double> scores;
  PeltDiagnostics pelt;
};

FusionResult detect_pelt_if(std::span<const double> yaw, std::span<const StepFeature> features,
                            const PeltConfig& pelt_cfg, const ForestParams& forest);

// Union of PELT events and single-step IF events; spans that overlap are merged.
std::vector<TurnEvent> fuse_events(std::span<const TurnEvent> pelt_events, std::span<const std::size_t> if_flags,
                                   std::span<const double> if_scores);

}  // namespace turnkit
