#pragma once

#include <span>
#include <string>
#include <vector>

#include "turnkit/events.hpp"
#include "turnkit/signal.hpp"

namespace turnkit {

// Trajectory plot: one circle per step, red for steps inside a turn event, black otherwise.
std::string render_trajectory_svg(std::span<const std::array<double, 2>> positions,
                                  std::span<const TurnEvent> events);

// Dead-reckoned positions from a per-step yaw series with fixed step length.
std::vector<std::array<double, 2>> dead_reckon(std::span<const double> yaw, double step_length = 0.7);

}  // namespace turnkit
