#include "turnkit/eval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <json.hpp>
#include <tuple>

namespace turnkit {

namespace {

// Steps strictly between two spans; 0 when they share a step.
std::size_t span_gap(const StepSpan& a, const StepSpan& b) {
  if (a.last < b.first) return b.first - a.last;
  if (b.last < a.first) return a.first - b.last;
  return 0;
}

}  // namespace

Matching match_events(std::span<const StepSpan> detected, std::span<const StepSpan> truth, const MatchConfig& cfg) {
  struct Edge {
    std::size_t gap, det, tru;
  };
  std::vector<Edge> edges;
  std::vector<bool> has_candidate(detected.size(), false);
  for (std::size_t d = 0; d < detected.size(); ++d) {
    for (std::size_t t = 0; t < truth.size(); ++t) {
      const std::size_t gap = span_gap(detected[d], truth[t]);
      // dilating both spans by the tolerance makes them meet iff the gap is at most twice the tolerance
      if (gap <= 2 * cfg.tolerance) {
        edges.push_back({gap, d, t});
        has_candidate[d] = true;
      }
    }
  }
  std::sort(edges.begin(), edges.end(),
            [](const Edge& a, const Edge& b) { return std::tie(a.gap, a.det, a.tru) < std::tie(b.gap, b.det, b.tru); });

  Matching m;
  m.true_turns = truth.size();
  m.truth_to_detection.assign(truth.size(), std::nullopt);
  m.detection_to_truth.assign(detected.size(), std::nullopt);
  for (const auto& e : edges) {
    if (m.truth_to_detection[e.tru] || m.detection_to_truth[e.det]) continue;
    m.truth_to_detection[e.tru] = e.det;
    m.detection_to_truth[e.det] = e.tru;
  }
  m.outcome.resize(detected.size());
  for (std::size_t d = 0; d < detected.size(); ++d) {
    if (m.detection_to_truth[d])
      m.outcome[d] = Outcome::matched;
    else
      m.outcome[d] = has_candidate[d] ? Outcome::overlap : Outcome::false_alarm;
  }
  return m;
}

Matching match_events(std::span<const TurnEvent> detected, std::span<const StepSpan> truth, const MatchConfig& cfg) {
  std::vector<StepSpan> spans;
  spans.reserve(detected.size());
  for (const auto& e : detected) spans.push_back(e.span());
  return match_events(std::span<const StepSpan>(spans), truth, cfg);
}

EvalReport EvalReport::from_counts(std::size_t true_turns, std::size_t detections, std::size_t matched,
                                   std::size_t false_alarms, std::size_t overlaps) {
  EvalReport r;
  r.true_turns = true_turns;
  r.detections = detections;
  r.matched = matched;
  r.missed = true_turns - matched;
  r.false_alarms = false_alarms;
  r.overlaps = overlaps;
  r.no_truth = true_turns == 0;
  // a single division of exact integer counts is correctly rounded
  r.missed_rate = r.no_truth ? 0.0 : static_cast<double>(r.missed) / static_cast<double>(true_turns);
  r.false_alarm_rate = detections == 0 ? 0.0 : static_cast<double>(false_alarms) / static_cast<double>(detections);
  return r;
}

EvalReport metrics(const Matching& m) {
  std::size_t matched = 0, overlaps = 0, false_alarms = 0;
  for (const auto o : m.outcome) {
    switch (o) {
      case Outcome::matched: ++matched; break;
      case Outcome::overlap: ++overlaps; break;
      case Outcome::false_alarm: ++false_alarms; break;
    }
  }
  return EvalReport::from_counts(m.true_turns, m.outcome.size(), matched, false_alarms, overlaps);
}

EvalReport pool(std::span<const EvalReport> reports) {
  std::size_t tt = 0, det = 0, mat = 0, fa = 0, ov = 0;
  for (const auto& r : reports) {
    tt += r.true_turns;
    det += r.detections;
    mat += r.matched;
    fa += r.false_alarms;
    ov += r.overlaps;
  }
  return EvalReport::from_counts(tt, det, mat, fa, ov);
}

std::string write_report_csv(std::span<const MethodReport> rows) {
  std::string out(kReportCsvHeader);
  out += '\n';
  for (const auto& row : rows) {
    const auto& r = row.pooled;
    out += fmt::format("{},{},{},{},{},{},{},{:.6f},{:.6f}\n", method_name(row.method), r.true_turns, r.detections,
                       r.matched, r.missed, r.false_alarms, r.overlaps, r.missed_rate, r.false_alarm_rate);
  }
  return out;
}

std::string write_report_json(std::span<const MethodReport> rows) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    const auto& r = row.pooled;
    nlohmann::ordered_json o;
    o["method"] = method_name(row.method);
    o["true_turns"] = r.true_turns;
    o["detections"] = r.detections;
    o["matched"] = r.matched;
    o["missed"] = r.missed;
    o["false_alarms"] = r.false_alarms;
    o["overlaps"] = r.overlaps;
    o["missed_rate"] = r.missed_rate;
    o["false_alarm_rate"] = r.false_alarm_rate;
    o["no_truth"] = r.no_truth;
    arr.push_back(std::move(o));
  }
  return arr.dump(2) + "\n";
}

}  // namespace turnkit
