#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "turnkit/events.hpp"

namespace turnkit {

struct ThresholdConfig {
  double tau = 22.5;          // degrees
  std::size_t merge_gap = 1;  // unflagged steps tolerated inside one turn

  void validate() const;
};

// Step indices i >= 1 with |wrap(yaw_i - yaw_{i-1})| > tau, ascending.
std::vector<std::size_t> detect_threshold(std::span<const double> yaw, const ThresholdConfig& cfg = {});

// One single-step event per flag; score is the wrapped delta over 180 degrees.
std::vector<TurnEvent> threshold_events(std::span<const double> yaw, const ThresholdConfig& cfg = {});

// Runs of flags whose neighbours are at most merge_gap + 1 apart become one event.
std::vector<TurnEvent> merge_adjacent(std::span<const std::size_t> flags, const ThresholdConfig& cfg = {});

// Same, keeping the maximum score of the merged single-step events.
std::vector<TurnEvent> merge_adjacent(std::span<const TurnEvent> step_events, const ThresholdConfig& cfg = {});

}  // namespace turnkit
