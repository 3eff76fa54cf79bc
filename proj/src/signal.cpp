#include "turnkit/signal.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "turnkit/angles.hpp"
#include "turnkit/error.hpp"
#include "turnkit/filter.hpp"

namespace turnkit {

namespace {

constexpr std::array<std::string_view, 13> kColumns = {"t",      "acc_x",  "acc_y",  "acc_z", "grav_x",
                                                       "grav_y", "grav_z", "mag_x",  "mag_y", "mag_z",
                                                       "gyr_x",  "gyr_y",  "gyr_z"};

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_cell(std::string_view cell, std::size_t line_no, std::string_view column) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ParseError(ErrorKind::parse,
                     fmt::format("line {}: column '{}': not a finite number: '{}'", line_no, column, cell), line_no);
  }
  return v;
}

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 unit_up(const Vec3& grav) {
  const double g = norm(grav);
  if (g == 0.0) return {0.0, 0.0, 1.0};
  return {grav[0] / g, grav[1] / g, grav[2] / g};
}

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    m = 0.5 * (m + lo);
  }
  return m;
}

// Clockwise heading in degrees at every sample, zero-order-hold integration of
// the gyro rate about the gravity axis.
std::vector<double> integrate_heading(const ImuLog& log) {
  const auto& s = log.samples;
  std::vector<double> heading(s.size(), 0.0);
  for (std::size_t i = 1; i < s.size(); ++i) {
    const double rate = -dot(s[i - 1].gyro, unit_up(s[i - 1].grav));
    heading[i] = heading[i - 1] + rate * (s[i].t - s[i - 1].t) * kDegPerRad;
  }
  return heading;
}

double interpolate_at(const ImuLog& log, std::span<const double> values, double t) {
  const auto& s = log.samples;
  if (t <= s.front().t) return values.front();
  if (t >= s.back().t) return values.back();
  const auto it = std::upper_bound(s.begin(), s.end(), t, [](double v, const ImuSample& x) { return v < x.t; });
  const std::size_t hi = static_cast<std::size_t>(it - s.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - s[lo].t) / (s[hi].t - s[lo].t);
  return values[lo] + w * (values[hi] - values[lo]);
}

// Sample index range [first, last) with t in [t0, t1).
std::pair<std::size_t, std::size_t> window(const ImuLog& log, double t0, double t1) {
  const auto& s = log.samples;
  auto lower = [](const ImuSample& x, double v) { return x.t < v; };
  const auto a = std::lower_bound(s.begin(), s.end(), t0, lower);
  const auto b = std::lower_bound(s.begin(), s.end(), t1, lower);
  return {static_cast<std::size_t>(a - s.begin()), static_cast<std::size_t>(b - s.begin())};
}

// Local maxima with flat tops reduced to their middle sample.
std::vector<std::size_t> local_maxima(std::span<const double> x) {
  std::vector<std::size_t> peaks;
  const std::size_t n = x.size();
  std::size_t i = 1;
  while (n >= 3 && i + 1 < n) {
    if (x[i - 1] < x[i]) {
      std::size_t ahead = i + 1;
      while (ahead + 1 < n && x[ahead] == x[i]) ++ahead;
      if (x[ahead] < x[i]) {
        peaks.push_back((i + ahead - 1) / 2);
        i = ahead;
        continue;
      }
    }
    ++i;
  }
  return peaks;
}

}  // namespace

void FilterConfig::validate() const {
  if (order != 2 && order != 4) fail(ErrorKind::invalid_argument, "filter order must be 2 or 4");
  if (!(low_cut > 0.0 && low_cut < high_cut && high_cut < 0.5))
    fail(ErrorKind::invalid_argument, "band edges must satisfy 0 < low_cut < high_cut < 0.5");
  if (!(peak_prominence >= 0.0)) fail(ErrorKind::invalid_argument, "peak prominence must be >= 0");
}

ImuLog parse_imu_csv(std::string_view text) {
  std::vector<std::string_view> lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  for (auto& l : lines) {
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
  }
  if (lines.empty()) throw ParseError(ErrorKind::schema, "empty input: missing header", 1);

  const auto header = split(lines[0], ',');
  for (const auto col : kColumns) {
    if (std::find(header.begin(), header.end(), col) == header.end())
      throw ParseError(ErrorKind::schema, fmt::format("header: missing column '{}'", col), 1);
  }
  if (lines[0] != kImuCsvHeader)
    throw ParseError(ErrorKind::schema, fmt::format("header: expected '{}'", kImuCsvHeader), 1);

  ImuLog log;
  log.samples.reserve(lines.size() - 1);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    if (lines[li].empty()) throw ParseError(ErrorKind::parse, fmt::format("line {}: blank line", line_no), line_no);
    const auto cells = split(lines[li], ',');
    if (cells.size() != kColumns.size())
      throw ParseError(ErrorKind::parse,
                       fmt::format("line {}: expected {} fields, found {}", line_no, kColumns.size(), cells.size()),
                       line_no);
    std::array<double, 13> v{};
    for (std::size_t c = 0; c < cells.size(); ++c) v[c] = parse_cell(cells[c], line_no, kColumns[c]);
    ImuSample s;
    s.t = v[0];
    s.acc = {v[1], v[2], v[3]};
    s.grav = {v[4], v[5], v[6]};
    s.mag = {v[7], v[8], v[9]};
    s.gyro = {v[10], v[11], v[12]};
    if (s.t < 0.0) throw ParseError(ErrorKind::parse, fmt::format("line {}: negative timestamp", line_no), line_no);
    if (!log.samples.empty() && !(s.t > log.samples.back().t))
      throw ParseError(ErrorKind::ordering,
                       fmt::format("line {}: timestamp {} does not increase", line_no, cells[0]), line_no);
    log.samples.push_back(s);
  }
  if (log.samples.size() < 2)
    throw ParseError(ErrorKind::insufficient_data, "log needs at least 2 samples");

  std::vector<double> rates;
  rates.reserve(log.samples.size() - 1);
  for (std::size_t i = 1; i < log.samples.size(); ++i)
    rates.push_back(1.0 / (log.samples[i].t - log.samples[i - 1].t));
  log.sample_rate_hz = median(std::move(rates));
  validate_log(log);
  return log;
}

void validate_log(const ImuLog& log) {
  const auto& s = log.samples;
  if (s.size() < 2) fail(ErrorKind::insufficient_data, "log needs at least 2 samples");
  if (!(log.sample_rate_hz > 0.0)) fail(ErrorKind::invalid_argument, "sample rate must be positive");
  const double nominal = 1.0 / log.sample_rate_hz;
  std::size_t irregular = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s[i].t >= 0.0) || !std::isfinite(s[i].t)) fail(ErrorKind::parse, "timestamps must be finite and >= 0");
    if (i == 0) continue;
    const double dt = s[i].t - s[i - 1].t;
    if (!(dt > 0.0)) fail(ErrorKind::ordering, fmt::format("sample {}: timestamps not strictly increasing", i));
    if (std::abs(dt - nominal) > 0.2 * nominal) ++irregular;
  }
  // at most 1% of gaps may deviate more than 20% from the nominal period
  if (irregular * 100 > s.size() - 1)
    fail(ErrorKind::parse, fmt::format("{} of {} sample gaps deviate >20% from 1/{} Hz", irregular, s.size() - 1,
                                       log.sample_rate_hz));
}

std::string write_imu_csv(const ImuLog& log) {
  std::string out(kImuCsvHeader);
  out += '\n';
  for (const auto& s : log.samples) {
    out += fmt::format("{:.4f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n",
                       s.t, s.acc[0], s.acc[1], s.acc[2], s.grav[0], s.grav[1], s.grav[2], s.mag[0], s.mag[1],
                       s.mag[2], s.gyro[0], s.gyro[1], s.gyro[2]);
  }
  return out;
}

std::vector<StepRecord> detect_steps(const ImuLog& log, const StepConfig& cfg) {
  validate_log(log);
  const double fs = log.sample_rate_hz;
  const double cutoff = cfg.lowpass_hz / fs;
  const auto lp = butter_lowpass(2, cutoff);
  const std::size_t settle =
      std::max<std::size_t>(default_padlen(lp) + 1, static_cast<std::size_t>(std::ceil(fs / cfg.lowpass_hz)));
  if (log.samples.size() < settle)
    fail(ErrorKind::insufficient_data,
         fmt::format("log has {} samples, step detection needs at least {}", log.samples.size(), settle));

  std::vector<double> excess;
  excess.reserve(log.samples.size());
  for (const auto& s : log.samples) excess.push_back(norm(s.acc) - norm(s.grav));
  const auto smooth = sosfiltfilt(lp, excess);

  std::vector<std::size_t> candidates;
  for (const auto p : local_maxima(smooth)) {
    if (smooth[p] > cfg.peak_threshold) candidates.push_back(p);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return smooth[a] > smooth[b]; });
  std::vector<std::size_t> accepted;
  for (const auto c : candidates) {
    const bool clear = std::none_of(accepted.begin(), accepted.end(), [&](std::size_t a) {
      return std::abs(log.samples[a].t - log.samples[c].t) < cfg.min_interval_s;
    });
    if (clear) accepted.push_back(c);
  }
  std::sort(accepted.begin(), accepted.end());

  std::vector<StepRecord> steps;
  if (accepted.empty()) return steps;

  const auto heading = integrate_heading(log);
  const double t_first = log.samples.front().t;
  const double t_last = log.samples.back().t;
  std::vector<double> peak_t;
  for (const auto a : accepted) peak_t.push_back(log.samples[a].t);

  std::array<double, 2> pos{0.0, 0.0};
  for (std::size_t i = 0; i < peak_t.size(); ++i) {
    StepRecord r;
    r.index = i;
    if (i == 0) {
      const double half = peak_t.size() > 1 ? (peak_t[1] - peak_t[0]) / 2.0 : cfg.min_interval_s / 2.0;
      r.t_start = std::max(t_first, peak_t[0] - half);
    } else {
      r.t_start = steps.back().t_end;
    }
    if (i + 1 < peak_t.size()) {
      r.t_end = (peak_t[i] + peak_t[i + 1]) / 2.0;
    } else {
      const double half = i > 0 ? (peak_t[i] - peak_t[i - 1]) / 2.0 : cfg.min_interval_s / 2.0;
      r.t_end = std::min(t_last, peak_t[i] + half);
    }
    r.yaw = wrap_deg(interpolate_at(log, heading, r.t_end));
    pos[0] += cfg.step_length_m * std::sin(r.yaw * kRadPerDeg);
    pos[1] += cfg.step_length_m * std::cos(r.yaw * kRadPerDeg);
    r.pos = pos;
    steps.push_back(r);
  }
  return steps;
}

std::vector<double> bandpass_yaw(std::span<const double> yaw, const FilterConfig& cfg) {
  cfg.validate();
  if (yaw.size() < static_cast<std::size_t>(3 * cfg.order))
    fail(ErrorKind::insufficient_data,
         fmt::format("band-pass needs at least {} steps, got {}", 3 * cfg.order, yaw.size()));
  const auto sections = butter_bandpass(cfg.order, cfg.low_cut, cfg.high_cut);
  return sosfiltfilt(sections, yaw);
}

std::vector<std::size_t> prominent_peaks(std::span<const double> filtered, double min_prominence) {
  std::vector<double> mag(filtered.size());
  std::transform(filtered.begin(), filtered.end(), mag.begin(), [](double v) { return std::abs(v); });
  std::vector<std::size_t> out;
  for (const auto p : local_maxima(mag)) {
    double left_min = mag[p];
    for (std::size_t i = p + 1; i-- > 0 && mag[i] <= mag[p];) left_min = std::min(left_min, mag[i]);
    double right_min = mag[p];
    for (std::size_t i = p; i < mag.size() && mag[i] <= mag[p]; ++i) right_min = std::min(right_min, mag[i]);
    const double prominence = mag[p] - std::max(left_min, right_min);
    if (prominence >= min_prominence) out.push_back(p);
  }
  return out;
}

std::vector<BlockRecord> segment_blocks(std::span<const double> filtered, const FilterConfig& cfg) {
  std::vector<BlockRecord> blocks;
  if (filtered.empty()) return blocks;
  std::size_t start = 0;
  for (const auto p : prominent_peaks(filtered, cfg.peak_prominence)) {
    blocks.push_back({start, p, 0.0, Region{1}});
    start = p + 1;
  }
  if (start < filtered.size()) blocks.push_back({start, filtered.size() - 1, 0.0, Region{1}});
  return blocks;
}

void assign_block_regions(std::vector<BlockRecord>& blocks, std::span<const double> theta) {
  for (auto& b : blocks) {
    b.theta = circular_mean_deg(theta.subspan(b.first_step, b.size()));
    b.region = classify_region(b.theta);
  }
}

namespace {

// Circular-mean heading over the first block of the unwrapped yaw series.
double baseline_heading(std::span<const double> yaw, const FilterConfig& cfg) {
  if (yaw.size() < static_cast<std::size_t>(3 * cfg.order)) return yaw.front();
  const auto unwrapped = unwrap_deg(yaw);
  const auto blocks = segment_blocks(bandpass_yaw(unwrapped, cfg), cfg);
  return circular_mean_deg(yaw.subspan(0, blocks.front().size()));
}

}  // namespace

std::vector<double> relative_heading(std::span<const double> yaw, const FilterConfig& cfg) {
  if (yaw.empty()) fail(ErrorKind::insufficient_data, "heading series is empty");
  cfg.validate();
  const double base = baseline_heading(yaw, cfg);
  std::vector<double> theta;
  theta.reserve(yaw.size());
  for (const double y : yaw) theta.push_back(wrap_deg(y - base));
  return theta;
}

std::vector<StepRecord> direction_angle(std::vector<StepRecord> steps, const ImuLog* log, const DirectionConfig& cfg) {
  if (steps.empty()) fail(ErrorKind::insufficient_data, "no steps");
  std::vector<double> yaw;
  yaw.reserve(steps.size());
  for (const auto& s : steps) yaw.push_back(s.yaw);
  const auto rel = relative_heading(yaw, cfg.filter);

  for (std::size_t i = 0; i < steps.size(); ++i) {
    double correction = 0.0;
    if (log != nullptr && cfg.velocity_correction) {
      const auto [a, b] = window(*log, steps[i].t_start, steps[i].t_end);
      Vec3 dv{0.0, 0.0, 0.0};
      Vec3 up{0.0, 0.0, 1.0};
      for (std::size_t k = a; k < b && k + 1 < log->samples.size(); ++k) {
        const auto& s = log->samples[k];
        up = unit_up(s.grav);
        const Vec3 lin{s.acc[0] - s.grav[0], s.acc[1] - s.grav[1], s.acc[2] - s.grav[2]};
        const double vert = dot(lin, up);
        const double dt = log->samples[k + 1].t - s.t;
        for (int c = 0; c < 3; ++c) dv[c] += (lin[c] - vert * up[c]) * dt;
      }
      // device forward (+y) and right axes projected on the horizontal plane
      const Vec3 y_axis{0.0, 1.0, 0.0};
      const double yu = dot(y_axis, up);
      Vec3 fwd{y_axis[0] - yu * up[0], y_axis[1] - yu * up[1], y_axis[2] - yu * up[2]};
      const double fn = norm(fwd);
      if (norm(dv) >= cfg.min_velocity_mps && fn > 1e-6) {
        for (auto& c : fwd) c /= fn;
        const Vec3 right = cross(fwd, up);
        correction = std::atan2(dot(dv, right), dot(dv, fwd)) * kDegPerRad;
      }
    }
    steps[i].theta = wrap_deg(rel[i] + correction);
  }
  return steps;
}

std::vector<std::array<double, 9>> step_features(std::span<const StepRecord> steps, const ImuLog& log) {
  std::vector<std::array<double, 9>> out;
  out.reserve(steps.size());
  for (const auto& st : steps) {
    auto [a, b] = window(log, st.t_start, st.t_end);
    if (a >= b) {
      a = std::min(a, log.samples.size() - 1);
      b = a + 1;
    }
    std::array<double, 9> f{};
    for (std::size_t k = a; k < b; ++k) {
      const auto& s = log.samples[k];
      for (int c = 0; c < 3; ++c) {
        f[c] += s.acc[c];
        f[3 + c] += s.grav[c];
        f[6 + c] += s.mag[c];
      }
    }
    for (auto& v : f) v /= static_cast<double>(b - a);
    out.push_back(f);
  }
  return out;
}

std::string write_step_csv(std::span<const StepRecord> steps) {
  std::string out(kStepCsvHeader);
  out += '\n';
  for (const auto& s : steps) {
    out += fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", s.index, s.t_start, s.t_end, s.yaw, s.theta,
                       s.pos[0], s.pos[1]);
  }
  return out;
}

}  // namespace turnkit
