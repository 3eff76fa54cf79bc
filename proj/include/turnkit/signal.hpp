#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "turnkit/hmm.hpp"

namespace turnkit {

using Vec3 = std::array<double, 3>;

struct ImuSample {
  double t = 0.0;  // seconds
  Vec3 acc{};      // m/s^2, includes gravity
  Vec3 grav{};     // m/s^2
  Vec3 mag{};      // uT
  Vec3 gyro{};     // rad/s
};

struct ImuLog {
  std::vector<ImuSample> samples;
  double sample_rate_hz = 0.0;
};

inline constexpr std::string_view kImuCsvHeader =
    "t,acc_x,acc_y,acc_z,grav_x,grav_y,grav_z,mag_x,mag_y,mag_z,gyr_x,gyr_y,gyr_z";

inline constexpr std::string_view kStepCsvHeader = "index,t_start,t_end,yaw_deg,theta_deg,pos_x,pos_y";

struct StepRecord {
  std::size_t index = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  double yaw = 0.0;    // degrees, clockwise positive, [-180, 180)
  double theta = 0.0;  // degrees relative to the walk baseline, [-180, 180)
  std::array<double, 2> pos{};
};

struct BlockRecord {
  std::size_t first_step = 0;
  std::size_t last_step = 0;  // inclusive
  double theta = 0.0;
  Region region{1};

  std::size_t size() const { return last_step - first_step + 1; }
};

struct StepConfig {
  double lowpass_hz = 3.0;
  double peak_threshold = 1.2;  // m/s^2 above the gravity-removed baseline
  double min_interval_s = 0.3;
  double step_length_m = 0.7;
};

struct FilterConfig {
  int order = 2;
  double low_cut = 0.02;   // cycles/step
  double high_cut = 0.25;  // cycles/step
  double peak_prominence = 10.0;  // degrees

  void validate() const;
};

struct DirectionConfig {
  FilterConfig filter{};
  // The velocity-vs-orientation correction is only applied when the
  // per-step horizontal velocity change exceeds this speed.
  double min_velocity_mps = 0.1;
  bool velocity_correction = false;
};

// Throws ParseError (schema / parse / ordering) on malformed input.
ImuLog parse_imu_csv(std::string_view text);
std::string write_imu_csv(const ImuLog& log);

// Checks the ImuLog invariants; throws Error on violation.
void validate_log(const ImuLog& log);

std::vector<StepRecord> detect_steps(const ImuLog& log, const StepConfig& cfg = {});

// Fills theta on every step. `log` may be null for step-only inputs, in which
// case theta is the heading relative to the first block.
std::vector<StepRecord> direction_angle(std::vector<StepRecord> steps, const ImuLog* log,
                                        const DirectionConfig& cfg = {});

// Theta series from a bare yaw series (step-only input).
std::vector<double> relative_heading(std::span<const double> yaw, const FilterConfig& cfg = {});

std::vector<double> bandpass_yaw(std::span<const double> yaw, const FilterConfig& cfg = {});

// Peak positions of |filtered| with prominence >= cfg.peak_prominence.
std::vector<std::size_t> prominent_peaks(std::span<const double> filtered, double min_prominence);

// Blocks carry step spans only; theta/region are filled by assign_block_regions.
std::vector<BlockRecord> segment_blocks(std::span<const double> filtered, const FilterConfig& cfg = {});

void assign_block_regions(std::vector<BlockRecord>& blocks, std::span<const double> theta);

// Per-step mean of acc/grav/mag over each step window (nine channels).
std::vector<std::array<double, 9>> step_features(std::span<const StepRecord> steps, const ImuLog& log);

std::string write_step_csv(std::span<const StepRecord> steps);

}  // namespace turnkit
