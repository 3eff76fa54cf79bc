#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "turnkit/changepoint.hpp"
#include "turnkit/events.hpp"
#include "turnkit/signal.hpp"

namespace turnkit {

struct WalkSegment {
  int straight_steps = 1;
  double turn_angle = 0.0;  // degrees, clockwise positive
  int turn_steps = 1;
};

struct WalkSpec {
  std::vector<WalkSegment> segments;
  double yaw_noise_sigma = 0.0;  // degrees, applied to straight steps
  StepFeature feature_shift{};   // added to features during turn steps
  StepFeature feature_noise{};   // per-channel sigma
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthWalk {
  std::vector<double> yaw;  // per step, degrees in [-180, 180)
  std::vector<StepFeature> features;
  std::vector<StepSpan> truth;  // ordered, disjoint turn intervals
  std::optional<ImuLog> imu;
};

// Resting feature levels: zero linear acceleration, gravity on +z, a
// north-pointing horizontal field with downward inclination.
StepFeature baseline_features();

struct ImuSynthConfig {
  double sample_rate_hz = 100.0;
  double step_period_s = 0.5;
  double impulse_amplitude = 3.0;  // m/s^2 along gravity
  double impulse_width_s = 0.25;
  double gravity = 9.81;
  double mag_horizontal = 20.0;  // uT
  double mag_vertical = -40.0;
};

SynthWalk generate_walk(const WalkSpec& spec);

// Raw 100 Hz log whose step-detected yaw reproduces walk.yaw: gyro-z carries
// each step's yaw increment spread over the step window, one acceleration
// impulse per step at mid-window, magnetic field rotated with heading.
ImuLog synthesize_imu(const SynthWalk& walk, const ImuSynthConfig& cfg = {});

struct CorpusTemplate {
  int min_turns = 2;
  int max_turns = 6;
  int min_straight = 5;
  int max_straight = 30;
  int min_turn_steps = 1;
  int max_turn_steps = 8;
  std::vector<double> turn_angles{45.0, -45.0, 90.0, -90.0, 135.0, -135.0, 180.0};
  double yaw_noise_sigma = 3.0;
  StepFeature feature_shift{1.5, 1.5, 0.0, 0.0, 0.0, 0.0, 6.0, 6.0, 0.0};
  StepFeature feature_noise{0.3, 0.3, 0.3, 0.05, 0.05, 0.05, 1.0, 1.0, 1.0};
};

// Walk i of the corpus uses seed derive_seed(seed, i).
std::vector<WalkSpec> corpus_specs(int count, const CorpusTemplate& tmpl, std::uint64_t seed);
std::vector<SynthWalk> generate_corpus(int count, const CorpusTemplate& tmpl, std::uint64_t seed);

// FNV-1a over the exact bit patterns of yaw, features and truth.
std::uint64_t corpus_checksum(const std::vector<SynthWalk>& walks);

std::string write_truth_json(const std::vector<StepSpan>& truth);
std::vector<StepSpan> parse_truth_json(const std::string& text);

}  // namespace turnkit
