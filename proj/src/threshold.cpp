#include "turnkit/threshold.hpp"

#include <algorithm>
#include <cmath>

#include "turnkit/angles.hpp"
#include "turnkit/error.hpp"

namespace turnkit {

void ThresholdConfig::validate() const {
  if (!(tau > 0.0)) fail(ErrorKind::invalid_argument, "tau must be positive");
}

std::vector<std::size_t> detect_threshold(std::span<const double> yaw, const ThresholdConfig& cfg) {
  cfg.validate();
  if (yaw.size() < 2) fail(ErrorKind::insufficient_data, "threshold detection needs at least 2 steps");
  std::vector<std::size_t> flags;
  for (std::size_t i = 1; i < yaw.size(); ++i) {
    if (std::abs(wrapped_delta_deg(yaw[i], yaw[i - 1])) > cfg.tau) flags.push_back(i);
  }
  return flags;
}

std::vector<TurnEvent> threshold_events(std::span<const double> yaw, const ThresholdConfig& cfg) {
  std::vector<TurnEvent> out;
  for (const auto i : detect_threshold(yaw, cfg)) {
    const double delta = std::abs(wrapped_delta_deg(yaw[i], yaw[i - 1]));
    out.push_back({i, i, Method::threshold, std::min(1.0, delta / 180.0)});
  }
  return out;
}

std::vector<TurnEvent> merge_adjacent(std::span<const TurnEvent> step_events, const ThresholdConfig& cfg) {
  std::vector<TurnEvent> out;
  for (const auto& e : step_events) {
    if (!out.empty() && e.first_step <= out.back().last_step + cfg.merge_gap + 1) {
      out.back().last_step = std::max(out.back().last_step, e.last_step);
      out.back().score = std::max(out.back().score, e.score);
    } else {
      out.push_back({e.first_step, e.last_step, Method::threshold_merged, e.score});
    }
  }
  return out;
}

std::vector<TurnEvent> merge_adjacent(std::span<const std::size_t> flags, const ThresholdConfig& cfg) {
  std::vector<TurnEvent> singles;
  singles.reserve(flags.size());
  for (const auto f : flags) singles.push_back({f, f, Method::threshold, 1.0});
  return merge_adjacent(std::span<const TurnEvent>(singles), cfg);
}

}  // namespace turnkit
