#pragma once

#include <optional>
#include <span>
#include <vector>

#include "turnkit/changepoint.hpp"
#include "turnkit/eval.hpp"
#include "turnkit/hmm.hpp"
#include "turnkit/signal.hpp"
#include "turnkit/synth.hpp"
#include "turnkit/threshold.hpp"

namespace turnkit {

// Step-indexed view of one walk, the common input of every detector.
struct WalkInput {
  std::vector<double> yaw;                 // degrees
  std::vector<double> theta;               // empty: derived as heading relative to the first block
  std::vector<StepFeature> features;       // may be empty for methods other than pelt-if
  std::vector<StepRecord> steps;           // present when built from a raw log
};

WalkInput walk_from_synth(const SynthWalk& walk);
WalkInput walk_from_log(const ImuLog& log, const StepConfig& steps = {}, const DirectionConfig& dir = {});

struct DetectorSettings {
  ThresholdConfig threshold{};
  FilterConfig filter{};
  HmmModel hmm = table_model();
  std::optional<LegacyModel> legacy;  // required for hmm-legacy
  PeltConfig pelt{};
  ForestParams forest{};
};

std::vector<double> walk_theta(const WalkInput& walk, const FilterConfig& filter);

// Blocks with theta and region assigned.
std::vector<BlockRecord> walk_blocks(const WalkInput& walk, const FilterConfig& filter);

std::vector<TurnEvent> run_detector(Method method, const WalkInput& walk, const DetectorSettings& settings);

// Legacy model from the per-step regions of every walk.
LegacyModel train_legacy(std::span<const WalkInput> walks, const FilterConfig& filter, int cluster_count = 14);

// Block-level HMM; a block is labelled a turn when it intersects a truth interval.
HmmModel train_block_hmm(std::span<const WalkInput> walks, std::span<const std::vector<StepSpan>> truth,
                         const FilterConfig& filter, double alpha = 1.0, double obs_epsilon = 0.1);

std::vector<MethodReport> compare_methods(std::span<const WalkInput> walks,
                                          std::span<const std::vector<StepSpan>> truth,
                                          const DetectorSettings& settings, std::span<const Method> methods,
                                          const MatchConfig& match = {});

}  // namespace turnkit
