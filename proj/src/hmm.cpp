#include "turnkit/hmm.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <json.hpp>
#include <numeric>

#include "turnkit/angles.hpp"
#include "turnkit/error.hpp"

namespace turnkit {

Region classify_region(double theta_deg) {
  const double u = wrap_deg(theta_deg) + 22.5;
  const int k = static_cast<int>(std::floor(u / 45.0));
  return Region{((k % kRegionCount) + kRegionCount) % kRegionCount + 1};
}

int region_distance(Region a, Region b) {
  const int d = std::abs(a.id - b.id);
  return std::min(d, kRegionCount - d);
}

void HmmModel::validate(double transition_tol) const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  for (std::size_t j = 0; j < kRegionCount; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < kRegionCount; ++i) {
      if (!in_unit(transition[i][j]))
        fail(ErrorKind::invalid_argument, fmt::format("transition({},{}) outside [0,1]", i + 1, j + 1));
      col += transition[i][j];
    }
    if (std::abs(col - 1.0) > transition_tol)
      fail(ErrorKind::invalid_argument, fmt::format("transition column r{} sums to {}", j + 1, col));
    if (!in_unit(emission[kTurnRow][j]) || !in_unit(emission[kStraightRow][j]))
      fail(ErrorKind::invalid_argument, fmt::format("emission column r{} outside [0,1]", j + 1));
    const double ecol = emission[kTurnRow][j] + emission[kStraightRow][j];
    if (std::abs(ecol - 1.0) > 1e-9)
      fail(ErrorKind::invalid_argument, fmt::format("emission column r{} sums to {}", j + 1, ecol));
  }
  if (!in_unit(obs_epsilon)) fail(ErrorKind::invalid_argument, "obs_epsilon outside [0,1]");
}

HmmModel table_model() {
  HmmModel m;
  m.transition = {{
      {0.5921, 0.0542, 0.0244, 0.0105, 0.0294, 0.0114, 0.0162, 0.0705},
      {0.0950, 0.7808, 0.1389, 0.0056, 0.0037, 0.0030, 0.0015, 0.0041},
      {0.0257, 0.1220, 0.7311, 0.0670, 0.0074, 0.0000, 0.0015, 0.0062},
      {0.0515, 0.0079, 0.0944, 0.8406, 0.1532, 0.0068, 0.0015, 0.0041},
      {0.0277, 0.0068, 0.0044, 0.0664, 0.6949, 0.0781, 0.0103, 0.0073},
      {0.0416, 0.0090, 0.0011, 0.0050, 0.1029, 0.8225, 0.1521, 0.0093},
      {0.0238, 0.0056, 0.0000, 0.0019, 0.0049, 0.0698, 0.7061, 0.0870},
      {0.1426, 0.0102, 0.0056, 0.0031, 0.0037, 0.0083, 0.1108, 0.8104},
  }};
  m.emission = {{
      {0.0812, 0.1085, 0.1300, 0.1011, 0.1360, 0.0979, 0.1773, 0.1192},
      {0.9188, 0.8915, 0.8700, 0.8989, 0.8640, 0.9021, 0.8227, 0.8808},
  }};
  m.obs_epsilon = 0.1;
  return m;
}

HmmModel parse_hmm_model(const std::string& json_text) {
  HmmModel m;
  try {
    const auto j = nlohmann::json::parse(json_text);
    const auto& t = j.at("transition");
    const auto& e = j.at("emission");
    if (t.size() != kRegionCount) fail(ErrorKind::schema, "transition must have 8 rows");
    if (e.size() != 2) fail(ErrorKind::schema, "emission must have 2 rows");
    for (std::size_t i = 0; i < kRegionCount; ++i) {
      if (t[i].size() != kRegionCount) fail(ErrorKind::schema, "transition rows must have 8 entries");
      for (std::size_t k = 0; k < kRegionCount; ++k) m.transition[i][k] = t[i][k].get<double>();
    }
    for (std::size_t i = 0; i < 2; ++i) {
      if (e[i].size() != kRegionCount) fail(ErrorKind::schema, "emission rows must have 8 entries");
      for (std::size_t k = 0; k < kRegionCount; ++k) m.emission[i][k] = e[i][k].get<double>();
    }
    m.obs_epsilon = j.value("obs_epsilon", 0.1);
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::parse, std::string("model JSON: ") + ex.what());
  }
  m.validate();
  return m;
}

std::string write_hmm_model(const HmmModel& model) {
  nlohmann::ordered_json j;
  j["transition"] = model.transition;
  j["emission"] = model.emission;
  j["obs_epsilon"] = model.obs_epsilon;
  return j.dump(2) + "\n";
}

HmmModel train_hmm(std::span<const LabeledBlocks> corpus, double alpha, double obs_epsilon) {
  if (!(alpha >= 0.0)) fail(ErrorKind::invalid_argument, "smoothing alpha must be >= 0");
  std::array<std::array<double, kRegionCount>, kRegionCount> counts{};
  std::array<double, kRegionCount> turns{};
  std::array<double, kRegionCount> visits{};
  std::size_t blocks = 0;
  for (const auto& walk : corpus) {
    if (walk.turn.size() != walk.regions.size())
      fail(ErrorKind::invalid_argument, "turn labels and regions differ in length");
    for (std::size_t t = 0; t < walk.regions.size(); ++t) {
      const auto r = walk.regions[t].index();
      visits[r] += 1.0;
      if (walk.turn[t]) turns[r] += 1.0;
      if (t + 1 < walk.regions.size()) counts[walk.regions[t + 1].index()][r] += 1.0;
      ++blocks;
    }
  }
  if (blocks == 0) fail(ErrorKind::insufficient_data, "training corpus has no blocks");

  HmmModel m;
  m.obs_epsilon = obs_epsilon;
  for (std::size_t j = 0; j < kRegionCount; ++j) {
    double from = 0.0;
    for (std::size_t i = 0; i < kRegionCount; ++i) from += counts[i][j];
    const double denom = from + kRegionCount * alpha;
    for (std::size_t i = 0; i < kRegionCount; ++i)
      m.transition[i][j] = denom > 0.0 ? (counts[i][j] + alpha) / denom : (i == j ? 1.0 : 0.0);
    const double edenom = visits[j] + 2.0 * alpha;
    m.emission[kTurnRow][j] = edenom > 0.0 ? (turns[j] + alpha) / edenom : 0.5;
    m.emission[kStraightRow][j] = 1.0 - m.emission[kTurnRow][j];
  }
  m.validate(1e-9);
  return m;
}

std::vector<std::array<double, kRegionCount>> forward_beliefs(std::span<const Region> observed,
                                                              const HmmModel& model) {
  using Belief = std::array<double, kRegionCount>;
  std::vector<Belief> out;
  if (observed.empty()) return out;
  Belief b{};
  b[observed[0].index()] = 1.0;
  out.push_back(b);
  const double hit = 1.0 - model.obs_epsilon;
  const double miss = model.obs_epsilon / (kRegionCount - 1);
  for (std::size_t t = 1; t < observed.size(); ++t) {
    const std::size_t o = observed[t].index();
    Belief next{};
    double total = 0.0;
    for (std::size_t i = 0; i < kRegionCount; ++i) {
      double p = 0.0;
      for (std::size_t j = 0; j < kRegionCount; ++j) p += model.transition[i][j] * b[j];
      next[i] = p * (i == o ? hit : miss);
      total += next[i];
    }
    if (total > 0.0) {
      for (auto& v : next) v /= total;
    } else {
      // the observation is impossible under the prediction: trust the observation
      next.fill(0.0);
      next[o] = 1.0;
    }
    b = next;
    out.push_back(b);
  }
  return out;
}

std::vector<TurnEvent> detect_hmm(std::span<const Region> observed, std::span<const StepSpan> blocks,
                                  const HmmModel& model) {
  if (observed.size() != blocks.size())
    fail(ErrorKind::invalid_argument, "one step span is required per observed block");
  const auto beliefs = forward_beliefs(observed, model);
  std::vector<TurnEvent> events;
  for (std::size_t t = 0; t + 1 < beliefs.size(); ++t) {
    const auto& cur = beliefs[t];
    const std::size_t map_region =
        static_cast<std::size_t>(std::max_element(cur.begin(), cur.end()) - cur.begin());
    const double stay = beliefs[t + 1][map_region];
    if (!(stay < 0.5)) continue;
    const double leave = 1.0 - stay;
    const double turn_w = leave * model.emission[kTurnRow][map_region];
    const double straight_w = stay * model.emission[kStraightRow][map_region];
    const double score = turn_w + straight_w > 0.0 ? turn_w / (turn_w + straight_w) : leave;
    events.push_back({blocks[t + 1].first, blocks[t + 1].last, Method::hmm_block, score});
  }
  return events;
}

// ---- legacy ----

std::vector<Triple> build_legacy_states(std::span<const Region> regions) {
  if (regions.size() < 3) fail(ErrorKind::insufficient_data, "legacy states need at least 3 steps");
  std::vector<Triple> out;
  for (std::size_t i = 0; i + 3 <= regions.size(); i += 3) out.push_back({regions[i], regions[i + 1], regions[i + 2]});
  return out;
}

int encode_triple(const Triple& t) { return (t[0].id - 1) * 64 + (t[1].id - 1) * 8 + (t[2].id - 1); }

Triple decode_triple(int code) {
  return {Region{code / 64 + 1}, Region{(code / 8) % 8 + 1}, Region{code % 8 + 1}};
}

int triple_distance(const Triple& a, const Triple& b) {
  return region_distance(a[0], b[0]) + region_distance(a[1], b[1]) + region_distance(a[2], b[2]);
}

std::size_t LegacyModel::relabel(const Triple& t) const {
  if (values.empty()) fail(ErrorKind::internal, "legacy model has no values");
  std::size_t best = 0;
  int best_d = triple_distance(t, values[0]);
  for (std::size_t v = 1; v < values.size() && best_d > 0; ++v) {
    const int d = triple_distance(t, values[v]);
    if (d < best_d) {
      best = v;
      best_d = d;
    }
  }
  return best;
}

void LegacyModel::validate() const {
  if (values.empty()) fail(ErrorKind::invalid_argument, "legacy model has no values");
  if (!underfilled && values.size() != static_cast<std::size_t>(cluster_count))
    fail(ErrorKind::invalid_argument, "legacy value count differs from cluster_count");
  if (value_probs.size() != values.size()) fail(ErrorKind::invalid_argument, "successor table has wrong size");
  for (const auto& row : value_probs) {
    if (row.size() != values.size()) fail(ErrorKind::invalid_argument, "successor table has wrong size");
    const double s = std::accumulate(row.begin(), row.end(), 0.0);
    if (std::abs(s - 1.0) > 1e-9) fail(ErrorKind::invalid_argument, "successor distribution does not sum to 1");
  }
}

LegacyModel cluster_legacy_values(std::span<const std::vector<Triple>> corpus, int cluster_count, double alpha) {
  if (cluster_count < 1) fail(ErrorKind::invalid_argument, "cluster_count must be >= 1");
  std::map<int, std::size_t> freq;
  for (const auto& seq : corpus)
    for (const auto& t : seq) ++freq[encode_triple(t)];
  if (freq.empty()) fail(ErrorKind::insufficient_data, "legacy corpus has no triples");

  std::vector<std::pair<int, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  LegacyModel m;
  m.cluster_count = cluster_count;
  m.underfilled = ranked.size() < static_cast<std::size_t>(cluster_count);
  const std::size_t k = std::min(ranked.size(), static_cast<std::size_t>(cluster_count));
  for (std::size_t i = 0; i < k; ++i) m.values.push_back(decode_triple(ranked[i].first));

  std::vector<std::vector<double>> counts(k, std::vector<double>(k, 0.0));
  for (const auto& seq : corpus) {
    for (std::size_t t = 0; t + 1 < seq.size(); ++t) counts[m.relabel(seq[t])][m.relabel(seq[t + 1])] += 1.0;
  }
  m.value_probs.assign(k, std::vector<double>(k, 0.0));
  for (std::size_t v = 0; v < k; ++v) {
    const double total = std::accumulate(counts[v].begin(), counts[v].end(), 0.0) + alpha * static_cast<double>(k);
    for (std::size_t w = 0; w < k; ++w)
      m.value_probs[v][w] = total > 0.0 ? (counts[v][w] + alpha) / total : (v == w ? 1.0 : 0.0);
  }
  return m;
}

std::string write_legacy_model(const LegacyModel& model) {
  nlohmann::ordered_json j;
  j["cluster_count"] = model.cluster_count;
  j["underfilled"] = model.underfilled;
  auto vals = nlohmann::ordered_json::array();
  for (const auto& t : model.values) vals.push_back({t[0].id, t[1].id, t[2].id});
  j["values"] = vals;
  j["successor"] = model.value_probs;
  return j.dump(2) + "\n";
}

LegacyModel parse_legacy_model(const std::string& json_text) {
  LegacyModel m;
  try {
    const auto j = nlohmann::json::parse(json_text);
    m.cluster_count = j.at("cluster_count").get<int>();
    m.underfilled = j.value("underfilled", false);
    for (const auto& v : j.at("values")) {
      if (v.size() != 3) fail(ErrorKind::schema, "legacy values must be region triples");
      Triple t;
      for (std::size_t i = 0; i < 3; ++i) {
        const int id = v[i].get<int>();
        if (id < 1 || id > kRegionCount) fail(ErrorKind::schema, "region id outside 1..8");
        t[i] = Region{id};
      }
      m.values.push_back(t);
    }
    m.value_probs = j.at("successor").get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::parse, std::string("legacy model JSON: ") + ex.what());
  }
  m.validate();
  return m;
}

std::vector<TurnEvent> detect_legacy_values(std::span<const std::size_t> values, const LegacyModel& model) {
  std::vector<TurnEvent> events;
  for (std::size_t t = 0; t < values.size(); ++t) {
    const std::size_t v = values[t];
    if (v >= model.values.size())
      fail(ErrorKind::internal, fmt::format("state {} has value {} outside the model", t, v));
    const double keep = model.value_probs[v][v];
    if (keep < 0.5) events.push_back({3 * t, 3 * t + 2, Method::hmm_legacy, 1.0 - keep});
  }
  return events;
}

std::vector<TurnEvent> detect_legacy(std::span<const Triple> triples, const LegacyModel& model) {
  std::vector<std::size_t> values;
  values.reserve(triples.size());
  for (const auto& t : triples) values.push_back(model.relabel(t));
  return detect_legacy_values(values, model);
}

}  // namespace turnkit
