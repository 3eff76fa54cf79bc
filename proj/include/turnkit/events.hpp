#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace turnkit {

enum class Method { threshold, threshold_merged, hmm_legacy, hmm_block, pelt, pelt_if };

inline constexpr Method kAllMethods[] = {Method::threshold, Method::threshold_merged, Method::hmm_legacy,
                                         Method::hmm_block, Method::pelt,      Method::pelt_if};

// Wire names as used in event files ("threshold_merged") and on the command line ("threshold-merged").
std::string_view method_name(Method m);
std::string_view method_flag(Method m);
std::optional<Method> parse_method(std::string_view s);

// Inclusive step interval.
struct StepSpan {
  std::size_t first = 0;
  std::size_t last = 0;

  friend bool operator==(const StepSpan&, const StepSpan&) = default;
};

struct TurnEvent {
  std::size_t first_step = 0;
  std::size_t last_step = 0;
  Method method = Method::threshold;
  double score = 0.0;

  StepSpan span() const { return {first_step, last_step}; }
  friend bool operator==(const TurnEvent&, const TurnEvent&) = default;
};

std::string write_events_json(const std::vector<TurnEvent>& events);
std::vector<TurnEvent> parse_events_json(const std::string& text);

}  // namespace turnkit
