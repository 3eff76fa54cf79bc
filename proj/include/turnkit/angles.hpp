#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace turnkit {

inline constexpr double kDegPerRad = 180.0 / std::numbers::pi;
inline constexpr double kRadPerDeg = std::numbers::pi / 180.0;

// Maps an angle in degrees onto [-180, 180).
inline double wrap_deg(double deg) {
  double r = std::fmod(deg + 180.0, 360.0);
  if (r < 0.0) r += 360.0;
  double out = r - 180.0;
  // fmod of a tiny negative can round up to exactly 360
  return out >= 180.0 ? out - 360.0 : out;
}

// Signed difference a - b mapped onto (-180, 180].
inline double wrapped_delta_deg(double a, double b) {
  double d = wrap_deg(a - b);
  return d == -180.0 ? 180.0 : d;
}

// Circular mean in degrees, result in [-180, 180). Returns 0 for an empty span.
inline double circular_mean_deg(std::span<const double> angles) {
  double s = 0.0, c = 0.0;
  for (double a : angles) {
    s += std::sin(a * kRadPerDeg);
    c += std::cos(a * kRadPerDeg);
  }
  if (s == 0.0 && c == 0.0) return 0.0;
  return wrap_deg(std::atan2(s, c) * kDegPerRad);
}

// Removes 360-degree jumps so consecutive samples differ by the wrapped delta.
inline std::vector<double> unwrap_deg(std::span<const double> angles) {
  std::vector<double> out;
  out.reserve(angles.size());
  for (std::size_t i = 0; i < angles.size(); ++i) {
    if (i == 0)
      out.push_back(angles[0]);
    else
      out.push_back(out.back() + wrapped_delta_deg(angles[i], angles[i - 1]));
  }
  return out;
}

}  // namespace turnkit
