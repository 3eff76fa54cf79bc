#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "turnkit/events.hpp"

namespace turnkit {

struct MatchConfig {
  std::size_t tolerance = 2;  // steps each span is dilated by
};

enum class Outcome { matched, overlap, false_alarm };

struct Matching {
  std::size_t true_turns = 0;
  std::vector<std::optional<std::size_t>> truth_to_detection;
  std::vector<Outcome> outcome;  // per detection
  std::vector<std::optional<std::size_t>> detection_to_truth;
};

// Greedy one-to-one assignment in order of increasing gap between dilated
// spans (ties: earlier detection, then earlier truth). Unassigned detections
// that touch an assigned truth are overlaps; the rest are false alarms.
Matching match_events(std::span<const StepSpan> detected, std::span<const StepSpan> truth,
                      const MatchConfig& cfg = {});
Matching match_events(std::span<const TurnEvent> detected, std::span<const StepSpan> truth,
                      const MatchConfig& cfg = {});

struct EvalReport {
  std::size_t true_turns = 0;
  std::size_t detections = 0;
  std::size_t matched = 0;
  std::size_t missed = 0;
  std::size_t false_alarms = 0;
  std::size_t overlaps = 0;
  double missed_rate = 0.0;
  double false_alarm_rate = 0.0;
  bool no_truth = false;  // true_turns == 0, missed_rate forced to 0

  static EvalReport from_counts(std::size_t true_turns, std::size_t detections, std::size_t matched,
                                std::size_t false_alarms, std::size_t overlaps);
};

EvalReport metrics(const Matching& m);

// Pooled (micro) aggregation: counts are summed, rates recomputed.
EvalReport pool(std::span<const EvalReport> reports);

struct MethodReport {
  Method method;
  EvalReport pooled;
  std::vector<EvalReport> per_walk;
};

inline constexpr std::string_view kReportCsvHeader =
    "method,true_turns,detections,matched,missed,false_alarms,overlaps,missed_rate,false_alarm_rate";

std::string write_report_csv(std::span<const MethodReport> rows);
std::string write_report_json(std::span<const MethodReport> rows);

}  // namespace turnkit
