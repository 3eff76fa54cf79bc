#include "turnkit/events.hpp"

#include <json.hpp>

#include "turnkit/error.hpp"

namespace turnkit {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::threshold: return "threshold";
    case Method::threshold_merged: return "threshold_merged";
    case Method::hmm_legacy: return "hmm_legacy";
    case Method::hmm_block: return "hmm_block";
    case Method::pelt: return "pelt";
    case Method::pelt_if: return "pelt_if";
  }
  return "unknown";
}

std::string_view method_flag(Method m) {
  switch (m) {
    case Method::threshold: return "threshold";
    case Method::threshold_merged: return "threshold-merged";
    case Method::hmm_legacy: return "hmm-legacy";
    case Method::hmm_block: return "hmm-block";
    case Method::pelt: return "pelt";
    case Method::pelt_if: return "pelt-if";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view s) {
  for (const auto m : kAllMethods) {
    if (s == method_name(m) || s == method_flag(m)) return m;
  }
  return std::nullopt;
}

std::string write_events_json(const std::vector<TurnEvent>& events) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& e : events) {
    nlohmann::ordered_json o;
    o["first_step"] = e.first_step;
    o["last_step"] = e.last_step;
    o["method"] = method_name(e.method);
    o["score"] = e.score;
    arr.push_back(std::move(o));
  }
  return arr.dump(2) + "\n";
}

std::vector<TurnEvent> parse_events_json(const std::string& text) {
  std::vector<TurnEvent> out;
  try {
    const auto arr = nlohmann::json::parse(text);
    if (!arr.is_array()) fail(ErrorKind::schema, "events file must be a JSON array");
    for (const auto& o : arr) {
      TurnEvent e;
      e.first_step = o.at("first_step").get<std::size_t>();
      e.last_step = o.at("last_step").get<std::size_t>();
      const auto m = parse_method(o.at("method").get<std::string>());
      if (!m) fail(ErrorKind::schema, "unknown method '" + o.at("method").get<std::string>() + "'");
      e.method = *m;
      e.score = o.at("score").get<double>();
      if (e.first_step > e.last_step) fail(ErrorKind::schema, "event with first_step > last_step");
      out.push_back(e);
    }
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::parse, std::string("events JSON: ") + ex.what());
  }
  return out;
}

}  // namespace turnkit
