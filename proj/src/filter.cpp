#include "turnkit/filter.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "turnkit/error.hpp"

namespace turnkit {

namespace {

using cplx = std::complex<double>;

// Left-half-plane poles of the analog Butterworth prototype lying in the upper half.
std::vector<cplx> upper_prototype_poles(int order) {
  std::vector<cplx> poles;
  for (int k = 1; k <= order; ++k) {
    const double angle = std::numbers::pi * (2.0 * k + order - 1) / (2.0 * order);
    const cplx p = std::polar(1.0, angle);
    if (p.imag() > 0.0) poles.push_back(p);
  }
  return poles;
}

cplx bilinear(cplx s) { return (2.0 + s) / (2.0 - s); }

Biquad conjugate_pair_section(cplx z, double b0, double b1, double b2) {
  return Biquad{b0, b1, b2, -2.0 * z.real(), std::norm(z)};
}

double prewarp(double f) { return 2.0 * std::tan(std::numbers::pi * f); }

void scale_gain(std::vector<Biquad>& sections, double gain) {
  const double per = std::pow(gain, 1.0 / static_cast<double>(sections.size()));
  for (auto& s : sections) {
    s.b0 *= per;
    s.b1 *= per;
    s.b2 *= per;
  }
}

void check_order(int order) {
  if (order < 2 || order % 2 != 0) fail(ErrorKind::invalid_argument, "filter order must be even and >= 2");
}

}  // namespace

std::vector<Biquad> butter_lowpass(int order, double cutoff) {
  check_order(order);
  if (!(cutoff > 0.0 && cutoff < 0.5)) fail(ErrorKind::invalid_argument, "low-pass cutoff must lie in (0, 0.5)");
  const double wc = prewarp(cutoff);
  std::vector<Biquad> sections;
  for (const cplx p : upper_prototype_poles(order)) {
    sections.push_back(conjugate_pair_section(bilinear(wc * p), 1.0, 2.0, 1.0));
  }
  scale_gain(sections, 1.0 / magnitude_response(sections, 0.0));
  return sections;
}

std::vector<Biquad> butter_bandpass(int order, double low, double high) {
  check_order(order);
  if (!(low > 0.0 && low < high && high < 0.5))
    fail(ErrorKind::invalid_argument, "band edges must satisfy 0 < low < high < 0.5");
  const double wl = prewarp(low);
  const double wh = prewarp(high);
  const double bw = wh - wl;
  const double w0sq = wl * wh;

  std::vector<Biquad> sections;
  for (const cplx p : upper_prototype_poles(order)) {
    // s^2 - p*bw*s + w0^2 = 0
    const cplx pb = p * bw;
    const cplx disc = std::sqrt(pb * pb - 4.0 * w0sq);
    for (const cplx s : {(pb + disc) / 2.0, (pb - disc) / 2.0}) {
      sections.push_back(conjugate_pair_section(bilinear(s), 1.0, 0.0, -1.0));
    }
  }
  const double f0 = std::atan(std::sqrt(w0sq) / 2.0) / std::numbers::pi;
  scale_gain(sections, 1.0 / magnitude_response(sections, f0));
  return sections;
}

double magnitude_response(std::span<const Biquad> sections, double f) {
  const cplx zinv = std::polar(1.0, -2.0 * std::numbers::pi * f);
  const cplx zinv2 = zinv * zinv;
  double mag = 1.0;
  for (const auto& s : sections) {
    const cplx num = s.b0 + s.b1 * zinv + s.b2 * zinv2;
    const cplx den = 1.0 + s.a1 * zinv + s.a2 * zinv2;
    mag *= std::abs(num / den);
  }
  return mag;
}

namespace {

struct SectionState {
  double s1 = 0.0, s2 = 0.0;
};

// Steady-state response of the cascade to a unit step, per section.
std::vector<SectionState> steady_state(std::span<const Biquad> sections) {
  std::vector<SectionState> zi;
  double level = 1.0;
  for (const auto& s : sections) {
    const double dc = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double y = level * dc;
    SectionState st;
    st.s2 = level * s.b2 - s.a2 * y;
    st.s1 = level * s.b1 - s.a1 * y + st.s2;
    zi.push_back(st);
    level = y;
  }
  return zi;
}

std::vector<double> run(std::span<const Biquad> sections, std::span<const double> x,
                        std::vector<SectionState> state) {
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t k = 0; k < sections.size(); ++k) {
    const auto& s = sections[k];
    auto& st = state[k];
    for (double& v : y) {
      const double in = v;
      const double out = s.b0 * in + st.s1;
      st.s1 = s.b1 * in - s.a1 * out + st.s2;
      st.s2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

std::vector<SectionState> scaled(std::vector<SectionState> zi, double v) {
  for (auto& st : zi) {
    st.s1 *= v;
    st.s2 *= v;
  }
  return zi;
}

}  // namespace

std::vector<double> sosfilt(std::span<const Biquad> sections, std::span<const double> x) {
  return run(sections, x, std::vector<SectionState>(sections.size()));
}

std::size_t default_padlen(std::span<const Biquad> sections) { return 3 * (2 * sections.size() + 1); }

std::vector<double> sosfiltfilt(std::span<const Biquad> sections, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) fail(ErrorKind::insufficient_data, "zero-phase filtering needs at least 2 samples");
  const std::size_t pad = std::min(default_padlen(sections), n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto zi = steady_state(sections);
  auto fwd = run(sections, ext, scaled(zi, ext.front()));
  std::reverse(fwd.begin(), fwd.end());
  auto back = run(sections, fwd, scaled(zi, fwd.front()));
  std::reverse(back.begin(), back.end());
  return {back.begin() + static_cast<std::ptrdiff_t>(pad), back.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

}  // namespace turnkit
