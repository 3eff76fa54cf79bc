#pragma once

#include <span>
#include <vector>

namespace turnkit {

// Second-order section, a0 normalized to 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

// Digital Butterworth designs via the bilinear transform with pre-warping.
// Frequencies are in cycles per sample, 0 < f < 0.5. `order` must be even.
std::vector<Biquad> butter_lowpass(int order, double cutoff);
// Band-pass of prototype order `order` (2*order poles in total).
std::vector<Biquad> butter_bandpass(int order, double low, double high);

// |H(e^{j 2 pi f})| of the cascade.
double magnitude_response(std::span<const Biquad> sections, double f);

std::vector<double> sosfilt(std::span<const Biquad> sections, std::span<const double> x);

// Default edge padding used by sosfiltfilt.
std::size_t default_padlen(std::span<const Biquad> sections);

// Zero-phase forward-backward filtering with odd edge extension and
// steady-state initial conditions. Requires x.size() > padlen after clamping.
std::vector<double> sosfiltfilt(std::span<const Biquad> sections, std::span<const double> x);

}  // namespace turnkit
