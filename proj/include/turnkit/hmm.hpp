#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "turnkit/events.hpp"

namespace turnkit {

inline constexpr int kRegionCount = 8;

// One of eight 45-degree heading sectors; region k covers
// [-22.5 + 45(k-1), 22.5 + 45(k-1)) modulo 360.
struct Region {
  int id = 1;  // 1..8

  std::size_t index() const { return static_cast<std::size_t>(id - 1); }
  static Region from_index(std::size_t i) { return Region{static_cast<int>(i) + 1}; }

  friend bool operator==(Region, Region) = default;
  friend auto operator<=>(Region, Region) = default;
};

Region classify_region(double theta_deg);

// Circular distance between two regions, 0..4.
int region_distance(Region a, Region b);

using RegionMatrix = std::array<std::array<double, kRegionCount>, kRegionCount>;
using EmissionMatrix = std::array<std::array<double, kRegionCount>, 2>;

inline constexpr std::size_t kTurnRow = 0;      // "O"
inline constexpr std::size_t kStraightRow = 1;  // "X"

// transition[i][j] = P(next = r_{i+1} | current = r_{j+1}); columns are distributions.
struct HmmModel {
  RegionMatrix transition{};
  EmissionMatrix emission{};
  double obs_epsilon = 0.1;

  // Throws Error if a column of `transition` deviates from 1 by more than
  // `transition_tol`, an emission column by more than 1e-9, or an entry leaves [0, 1].
  void validate(double transition_tol = 0.005) const;
};

// Published transition/emission tables.
HmmModel table_model();

HmmModel parse_hmm_model(const std::string& json_text);
std::string write_hmm_model(const HmmModel& model);

// A walk's block sequence with ground-truth turn labels, used for training.
struct LabeledBlocks {
  std::vector<Region> regions;
  std::vector<bool> turn;  // same length as regions
};

HmmModel train_hmm(std::span<const LabeledBlocks> corpus, double alpha = 1.0, double obs_epsilon = 0.1);

// Forward-filtering beliefs, one per block. Exposed for diagnostics and tests.
std::vector<std::array<double, kRegionCount>> forward_beliefs(std::span<const Region> observed,
                                                              const HmmModel& model);

// `blocks` gives the step span of each observation; regions[i] belongs to blocks[i].
std::vector<TurnEvent> detect_hmm(std::span<const Region> observed, std::span<const StepSpan> blocks,
                                  const HmmModel& model);

// ---- legacy three-step model ----

using Triple = std::array<Region, 3>;

std::vector<Triple> build_legacy_states(std::span<const Region> regions);

// Encodes a triple as 0..511 (8^3 base-8 digits).
int encode_triple(const Triple& t);
Triple decode_triple(int code);

int triple_distance(const Triple& a, const Triple& b);

struct LegacyModel {
  std::vector<Triple> values;                    // ordered by frequency rank
  std::vector<std::vector<double>> value_probs;  // value_probs[v][w] = P(next = w | current = v)
  int cluster_count = 14;
  bool underfilled = false;  // fewer distinct triples than cluster_count

  // Index of the retained value nearest to `t` (exact match first).
  std::size_t relabel(const Triple& t) const;

  void validate() const;
};

LegacyModel cluster_legacy_values(std::span<const std::vector<Triple>> corpus, int cluster_count = 14,
                                  double alpha = 1.0);

std::string write_legacy_model(const LegacyModel& model);
LegacyModel parse_legacy_model(const std::string& json_text);

// State t covers steps [3t, 3t + 2].
std::vector<TurnEvent> detect_legacy(std::span<const Triple> triples, const LegacyModel& model);
std::vector<TurnEvent> detect_legacy_values(std::span<const std::size_t> values, const LegacyModel& model);

}  // namespace turnkit
