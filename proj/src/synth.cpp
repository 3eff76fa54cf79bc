#include "turnkit/synth.hpp"

#include <bit>
#include <cmath>
#include <json.hpp>
#include <numbers>

#include "turnkit/angles.hpp"
#include "turnkit/error.hpp"
#include "turnkit/rng.hpp"

namespace turnkit {

void WalkSpec::validate() const {
  if (!(yaw_noise_sigma >= 0.0)) fail(ErrorKind::invalid_argument, "yaw_noise_sigma must be >= 0");
  for (const auto& s : segments) {
    if (s.straight_steps < 1) fail(ErrorKind::invalid_argument, "straight_steps must be >= 1");
    if (s.turn_steps < 1) fail(ErrorKind::invalid_argument, "turn_steps must be >= 1");
    if (!std::isfinite(s.turn_angle)) fail(ErrorKind::invalid_argument, "turn_angle must be finite");
  }
  for (const double v : feature_noise)
    if (!(v >= 0.0)) fail(ErrorKind::invalid_argument, "feature noise must be >= 0");
}

StepFeature baseline_features() { return {0.0, 0.0, 9.81, 0.0, 0.0, 9.81, 0.0, 20.0, -40.0}; }

SynthWalk generate_walk(const WalkSpec& spec) {
  spec.validate();
  Rng yaw_rng(derive_seed(spec.seed, 0));
  Rng feat_rng(derive_seed(spec.seed, 1));
  const StepFeature base = baseline_features();

  SynthWalk w;
  double heading = 0.0;
  auto push_step = [&](double yaw, bool turning) {
    w.yaw.push_back(wrap_deg(yaw));
    StepFeature f = base;
    for (std::size_t c = 0; c < kFeatureDim; ++c) {
      f[c] += feat_rng.normal() * spec.feature_noise[c];
      if (turning) f[c] += spec.feature_shift[c];
    }
    w.features.push_back(f);
  };

  for (const auto& seg : spec.segments) {
    for (int k = 0; k < seg.straight_steps; ++k) push_step(heading + yaw_rng.normal() * spec.yaw_noise_sigma, false);
    if (seg.turn_angle == 0.0) {
      for (int k = 0; k < seg.turn_steps; ++k) push_step(heading + yaw_rng.normal() * spec.yaw_noise_sigma, false);
      continue;
    }
    const std::size_t first = w.yaw.size();
    for (int k = 0; k < seg.turn_steps; ++k) push_step(heading + seg.turn_angle * (k + 1) / seg.turn_steps, true);
    w.truth.push_back({first, w.yaw.size() - 1});
    heading += seg.turn_angle;
  }
  return w;
}

ImuLog synthesize_imu(const SynthWalk& walk, const ImuSynthConfig& cfg) {
  ImuLog log;
  log.sample_rate_hz = cfg.sample_rate_hz;
  const std::size_t n = walk.yaw.size();
  if (n == 0) return log;
  const auto per_step = static_cast<std::size_t>(std::llround(cfg.step_period_s * cfg.sample_rate_hz));
  const std::size_t total = n * per_step + 1;
  const StepFeature base = baseline_features();

  std::vector<double> delta(n);
  for (std::size_t k = 0; k < n; ++k) delta[k] = wrapped_delta_deg(walk.yaw[k], k == 0 ? 0.0 : walk.yaw[k - 1]);
  std::vector<double> start_heading(n, 0.0);
  for (std::size_t k = 1; k < n; ++k) start_heading[k] = start_heading[k - 1] + delta[k - 1];

  log.samples.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    const double t = static_cast<double>(i) / cfg.sample_rate_hz;
    const std::size_t k = std::min(i / per_step, n - 1);
    const double step_t0 = static_cast<double>(k) * cfg.step_period_s;
    const double frac = std::min(1.0, (t - step_t0) / cfg.step_period_s);
    const double heading = (start_heading[k] + delta[k] * frac) * kRadPerDeg;

    ImuSample s;
    s.t = t;
    s.grav = {0.0, 0.0, cfg.gravity};
    const double centre = step_t0 + cfg.step_period_s / 2.0;
    const double u = (t - centre) / cfg.impulse_width_s;
    const double bump = std::abs(u) < 0.5 ? cfg.impulse_amplitude * std::pow(std::cos(std::numbers::pi * u), 2) : 0.0;
    const auto& f = walk.features.size() == n ? walk.features[k] : base;
    s.acc = {f[0] - base[0], f[1] - base[1], cfg.gravity + bump + (f[2] - base[2])};
    s.mag = {-cfg.mag_horizontal * std::sin(heading) + (f[6] - base[6]),
             cfg.mag_horizontal * std::cos(heading) + (f[7] - base[7]), cfg.mag_vertical + (f[8] - base[8])};
    // clockwise heading rate is the negative rotation rate about +z (up)
    s.gyro = {0.0, 0.0, -delta[k] * kRadPerDeg / cfg.step_period_s};
    log.samples.push_back(s);
  }
  return log;
}

std::vector<WalkSpec> corpus_specs(int count, const CorpusTemplate& tmpl, std::uint64_t seed) {
  if (count < 1) fail(ErrorKind::invalid_argument, "corpus count must be >= 1");
  if (tmpl.turn_angles.empty()) fail(ErrorKind::invalid_argument, "template has no turn angles");
  std::vector<WalkSpec> specs;
  specs.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng r(derive_seed(seed, static_cast<std::uint64_t>(i)));
    WalkSpec spec;
    const int turns = r.range(tmpl.min_turns, tmpl.max_turns);
    for (int k = 0; k < turns; ++k) {
      WalkSegment seg;
      seg.straight_steps = r.range(tmpl.min_straight, tmpl.max_straight);
      seg.turn_angle = tmpl.turn_angles[static_cast<std::size_t>(r.below(tmpl.turn_angles.size()))];
      seg.turn_steps = r.range(tmpl.min_turn_steps, tmpl.max_turn_steps);
      spec.segments.push_back(seg);
    }
    spec.segments.push_back({r.range(tmpl.min_straight, tmpl.max_straight), 0.0, 1});
    spec.yaw_noise_sigma = tmpl.yaw_noise_sigma;
    spec.feature_shift = tmpl.feature_shift;
    spec.feature_noise = tmpl.feature_noise;
    spec.seed = r.next();
    specs.push_back(std::move(spec));
  }
  return specs;
}

std::vector<SynthWalk> generate_corpus(int count, const CorpusTemplate& tmpl, std::uint64_t seed) {
  std::vector<SynthWalk> walks;
  for (const auto& spec : corpus_specs(count, tmpl, seed)) walks.push_back(generate_walk(spec));
  return walks;
}

namespace {

struct Fnv1a {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  void add(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xFF;
      h *= 0x100000001B3ULL;
    }
  }
  void add(double v) { add(std::bit_cast<std::uint64_t>(v)); }
};

}  // namespace

std::uint64_t corpus_checksum(const std::vector<SynthWalk>& walks) {
  Fnv1a f;
  f.add(static_cast<std::uint64_t>(walks.size()));
  for (const auto& w : walks) {
    f.add(static_cast<std::uint64_t>(w.yaw.size()));
    for (const double y : w.yaw) f.add(y);
    for (const auto& feat : w.features)
      for (const double v : feat) f.add(v);
    f.add(static_cast<std::uint64_t>(w.truth.size()));
    for (const auto& t : w.truth) {
      f.add(static_cast<std::uint64_t>(t.first));
      f.add(static_cast<std::uint64_t>(t.last));
    }
  }
  return f.h;
}

std::string write_truth_json(const std::vector<StepSpan>& truth) {
  nlohmann::ordered_json j;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& t : truth) arr.push_back({t.first, t.last});
  j["turns"] = std::move(arr);
  return j.dump() + "\n";
}

std::vector<StepSpan> parse_truth_json(const std::string& text) {
  std::vector<StepSpan> out;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& t : j.at("turns")) {
      if (t.size() != 2) fail(ErrorKind::schema, "truth turns must be [first_step, last_step] pairs");
      StepSpan s{t[0].get<std::size_t>(), t[1].get<std::size_t>()};
      if (s.first > s.last) fail(ErrorKind::schema, "truth turn with first_step > last_step");
      if (!out.empty() && s.first <= out.back().last) fail(ErrorKind::schema, "truth turns must be ordered and disjoint");
      out.push_back(s);
    }
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::parse, std::string("truth JSON: ") + ex.what());
  }
  return out;
}

}  // namespace turnkit
