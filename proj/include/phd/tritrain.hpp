#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "phd/bounds.hpp"
#include "phd/data.hpp"
#include "phd/models.hpp"

namespace phd {

// Target rows on which two hypotheses agree, labeled by that agreement.
struct AgreementSet {
  std::vector<std::size_t> indices;
  std::vector<int> labels;
  double coverage = 0.0;  // |indices| / n_T
};

AgreementSet build_tpl(const Hypothesis& h1, const Hypothesis& h2, const Dataset& t);

struct RoundRecord;
using RoundCallback = std::function<void(const RoundRecord&)>;

struct TriTrainConfig {
  Architecture arch;           // shared by h, h1 and h2
  TrainConfig source;          // initial training of h1, h2 and the source-only h
  TrainConfig refine;          // per-round training (epochs per round)
  std::size_t rounds = 3;
  double holdout_fraction = 0.5;  // target rows kept out of the agreement set
  double delta = 0.05;
  std::size_t rademacher_draws = 10;
  std::optional<RademacherEstimate> rademacher;  // estimated on the held-out rows if absent
  const Hypothesis* target_star = nullptr;       // diagnostic only
  RoundCallback on_round;                        // called as each round completes
  std::uint64_t seed = 0;

  void validate() const;
};

struct RoundRecord {
  std::size_t round = 0;
  bool skipped = false;  // empty agreement set
  double coverage = 0.0;
  std::size_t tpl_size = 0;
  double tpl_phd = 0.0;
  // Best-so-far R_T_PL(h, h1) after each epoch of the round, starting value first.
  std::vector<double> tpl_risk;
  BoundReport bound;
  std::optional<double> target_accuracy;  // on held-out rows, when labels are known
};

struct TriTrainResult {
  Hypothesis h, h1, h2;
  Hypothesis source_only;
  std::vector<RoundRecord> rounds;
  std::vector<std::size_t> pl_rows;    // target rows eligible for pseudo-labels
  std::vector<std::size_t> held_rows;  // target rows used for the bound
};

// h1 and h2 are trained on bootstrap resamples of S with distinct seeds.
// Each round rebuilds the agreement set on the pseudo-label rows, trains h
// on it (warm start, keeping the epoch with the lowest disagreement with h1),
// fine-tunes h1 and h2 on S plus the agreement set, and records the
// fixed-pair bound with PHD measured on the held-out rows.
TriTrainResult tritrain(const Dataset& s, const Dataset& t, const TriTrainConfig& cfg);
// Same loop starting from supplied h1, h2.
TriTrainResult tritrain(const Dataset& s, const Dataset& t, const Hypothesis& h1,
                        const Hypothesis& h2, const TriTrainConfig& cfg);

// One row per round: round, skipped, coverage, tpl_size, tpl_phd, each bound
// term, total, target accuracy.
std::string trace_csv(const TriTrainResult& r);

}  // namespace phd
