#include "turnkit/svg.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "turnkit/angles.hpp"

namespace turnkit {

std::vector<std::array<double, 2>> dead_reckon(std::span<const double> yaw, double step_length) {
  std::vector<std::array<double, 2>> pos;
  std::array<double, 2> p{0.0, 0.0};
  for (const double y : yaw) {
    p[0] += step_length * std::sin(y * kRadPerDeg);
    p[1] += step_length * std::cos(y * kRadPerDeg);
    pos.push_back(p);
  }
  return pos;
}

std::string render_trajectory_svg(std::span<const std::array<double, 2>> positions,
                                  std::span<const TurnEvent> events) {
  std::vector<bool> turning(positions.size(), false);
  for (const auto& e : events)
    for (std::size_t i = e.first_step; i <= e.last_step && i < turning.size(); ++i) turning[i] = true;

  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  if (!positions.empty()) {
    xmin = xmax = positions[0][0];
    ymin = ymax = positions[0][1];
    for (const auto& p : positions) {
      xmin = std::min(xmin, p[0]);
      xmax = std::max(xmax, p[0]);
      ymin = std::min(ymin, p[1]);
      ymax = std::max(ymax, p[1]);
    }
  }
  constexpr double kSize = 600.0;
  constexpr double kMargin = 20.0;
  const double span = std::max({xmax - xmin, ymax - ymin, 1e-9});
  const double scale = (kSize - 2 * kMargin) / span;

  std::string out = fmt::format(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{0:.0f}\" viewBox=\"0 0 {0:.0f} {0:.0f}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      kSize);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const double x = kMargin + (positions[i][0] - xmin) * scale;
    // north up
    const double y = kSize - kMargin - (positions[i][1] - ymin) * scale;
    out += fmt::format("<circle class=\"step\" data-step=\"{}\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", i,
                       x, y, turning[i] ? "red" : "black");
  }
  out += "</svg>\n";
  return out;
}

}  // namespace turnkit
