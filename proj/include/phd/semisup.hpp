#pragma once

#include <cstdint>
#include <vector>

#include "phd/data.hpp"
#include "phd/models.hpp"

namespace phd {

struct SelfTrainConfig {
  double tau = 0.95;           // confidence threshold, in (0.5, 1)
  std::size_t rounds = 5;      // maximum pseudo-labeling rounds
  std::size_t cap = 0;         // max new pseudo-labels per round, 0 = unlimited
  double pseudo_weight = 0.5;  // loss weight of a pseudo-labeled row
  TrainConfig base;

  void validate() const;
};

struct SelfTrainResult {
  Hypothesis h;
  // Target rows that were pseudo-labeled (and therefore used in training),
  // ascending. Discrepancy estimates must exclude them.
  std::vector<std::size_t> consumed;
  std::vector<std::size_t> added_per_round;
  std::size_t rounds_run = 0;
};

// Confidence-thresholded self-training. Trains on S, then each round adds
// the not yet pseudo-labeled target rows whose predicted-class probability is
// at least tau (most confident first when capped; a label is fixed when the
// row is added) and retrains from scratch on S plus the pseudo-labeled rows.
// Stops after `rounds` rounds or when no new row qualifies.
SelfTrainResult train_self(const Dataset& s, const Dataset& t, const Architecture& arch,
                           const SelfTrainConfig& cfg, std::uint64_t seed);

}  // namespace phd
