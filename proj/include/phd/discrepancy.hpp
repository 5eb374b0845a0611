#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "phd/data.hpp"
#include "phd/models.hpp"

namespace phd {

enum class Method { closed_form, adversarial, exact_enumeration, assignment };

std::string to_string(Method m);

struct DiscrepancyReport {
  std::string measure;
  double value = 0.0;
  Method method = Method::closed_form;
  std::vector<std::pair<std::string, std::string>> details;  // direction, witness, ...
  std::vector<std::uint64_t> seeds;
  std::size_t n_s = 0;
  std::size_t n_t = 0;
};

// Axis-aligned decision stump. Polarity +1 predicts class 1 when
// x[feature] > threshold, polarity -1 predicts class 1 when
// x[feature] <= threshold. Constant stumps predict `label` everywhere.
struct Stump {
  bool constant = false;
  int label = 0;
  std::size_t feature = 0;
  double threshold = 0.0;
  int polarity = 1;

  std::string describe() const;
};

// Every stump distinguishable on a sample: per feature, thresholds at the
// midpoints of consecutive distinct values, both polarities, plus the two
// constants. Canonical order (used for tie-breaking): feature ascending,
// threshold ascending, polarity + before -, then constant 0, constant 1.
class StumpClass {
 public:
  static StumpClass from_sample(const Matrix& x);
  static StumpClass from_samples(const Matrix& a, const Matrix& b);

  std::size_t dim() const noexcept { return thresholds_.size(); }
  std::size_t size() const noexcept;
  const std::vector<std::vector<double>>& thresholds() const noexcept { return thresholds_; }
  Stump at(std::size_t index) const;

  static std::vector<int> predict(const Stump& s, const Matrix& x);
  // The stump as a linear hypothesis. Predictions agree except at points lying
  // exactly on the threshold, which never happens on the construction sample.
  static Hypothesis hypothesis(const Stump& s, std::size_t dim);

 private:
  std::vector<std::vector<double>> thresholds_;
};

// Best stump for a signed row weighting: maximizes |sum_i a_i 1{h(x_i) != r_i}|
// over the class. `x` must be the sample the weights refer to.
struct StumpOptimum {
  double value = 0.0;  // signed sum at the optimum
  Stump stump;
};
StumpOptimum best_stump(const StumpClass& cls, const Matrix& x, std::span<const double> a,
                        std::span<const int> reference, bool absolute = true);

// Stump with the lowest zero-one error on a labeled binary sample (ties to
// the canonical order).
Stump stump_erm(const StumpClass& cls, const Dataset& d);

// Pairwise paired-hypotheses discrepancy: mean loss between h1 and h2 on the
// target rows not listed in `exclude`.
DiscrepancyReport paired_discrepancy(const Hypothesis& h1, const Hypothesis& h2, const Dataset& t,
                                     const LossSpec& loss, std::span<const std::size_t> exclude = {});

DiscrepancyReport dh_exact(const Dataset& s, const Dataset& t, const StumpClass& cls);
DiscrepancyReport sdisc_exact(const Dataset& s, const Dataset& t, const Hypothesis& h_s,
                              const StumpClass& cls);
// Throws CapacityError when the class is larger than `max_class`.
DiscrepancyReport disc_exact(const Dataset& s, const Dataset& t, const StumpClass& cls,
                             std::size_t max_class = 4096);

struct AdversarialConfig {
  TrainConfig train;
  // When set, discriminators are trained on one half of each sample and the
  // statistic is reported on the other half. Otherwise the statistic is the
  // in-sample value on the sample the discriminator was fit to.
  bool held_out = false;
  std::uint64_t split_seed = 0;
};

DiscrepancyReport dh_adv(const Dataset& s, const Dataset& t, const Architecture& arch,
                         const AdversarialConfig& cfg);
DiscrepancyReport sdisc_adv(const Dataset& s, const Dataset& t, const Hypothesis& h_s,
                            const Architecture& arch, const AdversarialConfig& cfg);

// Exact empirical Wasserstein-1 under the Euclidean ground cost. 1-D inputs
// use the quantile coupling; otherwise an optimal assignment on at most
// `max_points` points per side (the larger sample is subsampled with `seed`
// when sizes differ).
DiscrepancyReport w1_exact(const Dataset& s, const Dataset& t, std::uint64_t seed = 0,
                           std::size_t max_points = 512);

// Minimum-cost perfect matching on a square cost matrix; returns the column
// assigned to each row.
std::vector<std::size_t> min_cost_assignment(const Matrix& cost);

// L1 distance between histograms on a shared grid of `bins` cells per
// feature spanning the pooled range. In [0, 2].
double l1_hist(const Dataset& s, const Dataset& t, std::size_t bins);

}  // namespace phd
