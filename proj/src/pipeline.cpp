#include "turnkit/pipeline.hpp"

#include <algorithm>

#include "turnkit/angles.hpp"
#include "turnkit/error.hpp"

namespace turnkit {

WalkInput walk_from_synth(const SynthWalk& walk) {
  WalkInput in;
  in.yaw = walk.yaw;
  in.features = walk.features;
  return in;
}

WalkInput walk_from_log(const ImuLog& log, const StepConfig& step_cfg, const DirectionConfig& dir) {
  WalkInput in;
  in.steps = detect_steps(log, step_cfg);
  if (in.steps.empty()) return in;
  in.steps = direction_angle(std::move(in.steps), &log, dir);
  for (const auto& s : in.steps) {
    in.yaw.push_back(s.yaw);
    in.theta.push_back(s.theta);
  }
  in.features = step_features(in.steps, log);
  return in;
}

std::vector<double> walk_theta(const WalkInput& walk, const FilterConfig& filter) {
  if (!walk.theta.empty()) return walk.theta;
  return relative_heading(walk.yaw, filter);
}

std::vector<BlockRecord> walk_blocks(const WalkInput& walk, const FilterConfig& filter) {
  const std::size_t n = walk.yaw.size();
  if (n == 0) return {};
  const auto theta = walk_theta(walk, filter);
  std::vector<BlockRecord> blocks;
  if (n < static_cast<std::size_t>(3 * filter.order)) {
    blocks.push_back({0, n - 1, 0.0, Region{1}});
  } else {
    blocks = segment_blocks(bandpass_yaw(unwrap_deg(walk.yaw), filter), filter);
  }
  assign_block_regions(blocks, theta);
  return blocks;
}

namespace {

std::vector<Region> step_regions(const WalkInput& walk, const FilterConfig& filter) {
  std::vector<Region> regions;
  for (const double t : walk_theta(walk, filter)) regions.push_back(classify_region(t));
  return regions;
}

}  // namespace

std::vector<TurnEvent> run_detector(Method method, const WalkInput& walk, const DetectorSettings& settings) {
  switch (method) {
    case Method::threshold:
      return threshold_events(walk.yaw, settings.threshold);
    case Method::threshold_merged: {
      const auto singles = threshold_events(walk.yaw, settings.threshold);
      return merge_adjacent(std::span<const TurnEvent>(singles), settings.threshold);
    }
    case Method::hmm_legacy: {
      if (!settings.legacy) fail(ErrorKind::invalid_argument, "hmm-legacy needs a trained legacy model");
      const auto regions = step_regions(walk, settings.filter);
      if (regions.size() < 3) return {};
      return detect_legacy(build_legacy_states(regions), *settings.legacy);
    }
    case Method::hmm_block: {
      const auto blocks = walk_blocks(walk, settings.filter);
      std::vector<Region> regions;
      std::vector<StepSpan> spans;
      for (const auto& b : blocks) {
        regions.push_back(b.region);
        spans.push_back({b.first_step, b.last_step});
      }
      return detect_hmm(regions, spans, settings.hmm);
    }
    case Method::pelt:
      return detect_pelt(walk.yaw, settings.pelt);
    case Method::pelt_if:
      if (walk.features.size() != walk.yaw.size())
        fail(ErrorKind::invalid_argument, "pelt-if needs one feature vector per step");
      return detect_pelt_if(walk.yaw, walk.features, settings.pelt, settings.forest).events;
  }
  fail(ErrorKind::internal, "unhandled method");
}

LegacyModel train_legacy(std::span<const WalkInput> walks, const FilterConfig& filter, int cluster_count) {
  std::vector<std::vector<Triple>> corpus;
  for (const auto& w : walks) {
    const auto regions = step_regions(w, filter);
    if (regions.size() >= 3) corpus.push_back(build_legacy_states(regions));
  }
  return cluster_legacy_values(corpus, cluster_count);
}

HmmModel train_block_hmm(std::span<const WalkInput> walks, std::span<const std::vector<StepSpan>> truth,
                         const FilterConfig& filter, double alpha, double obs_epsilon) {
  if (walks.size() != truth.size()) fail(ErrorKind::invalid_argument, "one truth list is required per walk");
  std::vector<LabeledBlocks> corpus;
  for (std::size_t w = 0; w < walks.size(); ++w) {
    LabeledBlocks lb;
    for (const auto& b : walk_blocks(walks[w], filter)) {
      lb.regions.push_back(b.region);
      const bool turn = std::any_of(truth[w].begin(), truth[w].end(), [&](const StepSpan& t) {
        return t.first <= b.last_step && b.first_step <= t.last;
      });
      lb.turn.push_back(turn);
    }
    corpus.push_back(std::move(lb));
  }
  return train_hmm(corpus, alpha, obs_epsilon);
}

std::vector<MethodReport> compare_methods(std::span<const WalkInput> walks,
                                          std::span<const std::vector<StepSpan>> truth,
                                          const DetectorSettings& settings, std::span<const Method> methods,
                                          const MatchConfig& match) {
  if (walks.size() != truth.size()) fail(ErrorKind::invalid_argument, "one truth list is required per walk");
  std::vector<MethodReport> out;
  for (const auto m : methods) {
    MethodReport row{m, {}, {}};
    for (std::size_t w = 0; w < walks.size(); ++w) {
      const auto events = run_detector(m, walks[w], settings);
      row.per_walk.push_back(metrics(match_events(std::span<const TurnEvent>(events), truth[w], match)));
    }
    row.pooled = pool(row.per_walk);
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace turnkit
