#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phd/data.hpp"
#include "phd/models.hpp"
#include "phd/semisup.hpp"

namespace phd {

// Correlation alignment: whiten the source with its own covariance, recolor
// with the target covariance and move it to the target mean:
//   X_s <- (X_s - mu_s) (C_s + rI)^(-1/2) (C_t + rI)^(1/2) + mu_t.
// Labels and tag are kept.
Dataset coral(const Dataset& s, const Dataset& t, double ridge = 1e-6);

enum class SelectionMeasure { phd, w1 };

SelectionMeasure parse_selection_measure(const std::string& name);
std::string to_string(SelectionMeasure m);

struct SelectionConfig {
  SelectionMeasure measure = SelectionMeasure::phd;
  std::size_t top_k = 5;
  Architecture arch;          // source classifiers and the final pooled classifier
  TrainConfig train;
  SelfTrainConfig self_train;
  double phd_holdout = 0.5;   // target rows reserved for measuring PHD
  double ridge = 1e-6;
  std::size_t w1_points = 512;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RankedSource {
  std::size_t index = 0;
  double value = 0.0;
  bool clean = false;
};

struct SelectionOutcome {
  std::string measure;
  std::vector<RankedSource> ranking;  // ascending by value, ties by index
  std::vector<std::size_t> chosen;    // the first top_k of the ranking
  std::size_t score = 0;              // clean sources among the chosen
  std::optional<double> target_accuracy;
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

// Ranks ascending by value, ties broken by the lower index.
std::vector<std::size_t> rank_ascending(const std::vector<double>& values);

// Scores every source against the unlabeled target, keeps the top_k most
// similar, aligns each chosen source to the target with CORAL, pools them and
// trains one classifier. When `t` carries labels they are used only for the
// diagnostic target accuracy.
SelectionOutcome select_sources(const std::vector<Dataset>& sources,
                                const std::vector<bool>& clean, const Dataset& t,
                                const SelectionConfig& cfg, double sigma = 0.0);

}  // namespace phd
