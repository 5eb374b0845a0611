#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phd/data.hpp"
#include "phd/discrepancy.hpp"
#include "phd/models.hpp"

namespace phd {

// feasible: computable from labeled source and unlabeled target.
// diagnostic: needs target labels or true minimizers; reported, never used
// for decisions.
enum class TermKind { feasible, diagnostic, complexity, confidence };

std::string to_string(TermKind k);

struct BoundTerm {
  std::string name;
  double value = 0.0;
  TermKind kind = TermKind::feasible;
};

struct BoundReport {
  std::string id;
  std::vector<BoundTerm> terms;
  double total = 0.0;  // terms summed in order
  double delta = 0.0;  // 0 when the bound holds deterministically
  std::size_t n_t = 0;

  void add(std::string name, double value, TermKind kind);
  double sum(TermKind kind) const;
  const BoundTerm* find(const std::string& name) const;
};

struct RademacherEstimate {
  double value = 0.0;
  std::size_t draws = 0;
  double std_error = 0.0;
  std::string class_descriptor;
  std::string method;  // "exact-finite" or "fit-to-noise"
};

// Monte Carlo over sign vectors of the empirical Rademacher complexity
// E_sigma sup_h (1/m) sum_i sigma_i h(x_i) with h valued in {-1, +1}.
// Draw k uses the child stream k of `seed`; draws are summed in order.

// Finite class given by its members' values on the sample (each +-1).
RademacherEstimate rademacher_finite(const std::vector<std::vector<int>>& members,
                                     std::size_t draws, std::uint64_t seed);
// Stumps on x with both polarities and the constants; inner sup exact.
RademacherEstimate rademacher_stumps(const Matrix& x, std::size_t draws, std::uint64_t seed);
// Trained class: the inner sup is approximated by fitting the architecture
// to the signs and taking |(1/m) sum sigma_i h(x_i)|.
RademacherEstimate rademacher_fit(const Matrix& x, const Architecture& arch,
                                  const TrainConfig& cfg, std::size_t draws, std::uint64_t seed);

// M sqrt(log(1/delta) / 2n); the two-sided form uses log(2/delta).
double hoeffding_term(double bound, std::size_t n, double delta, bool two_sided = false);

// Target-side quantities that need labels. `target_star` stands in for the
// best target hypothesis; it is evaluated on `sample` (or on the target
// sample of the bound when null). Without it the diagnostic term is omitted.
struct TargetOracle {
  const Hypothesis* target_star = nullptr;
  const Dataset* sample = nullptr;
};

BoundReport bound_lemma1(double bound, std::size_t n, double delta, bool two_sided = false);

BoundReport bound_ineq1(const Hypothesis& h, const Hypothesis& h_s, const Dataset& t,
                        const TargetOracle& oracle = {});
BoundReport bound_ineq2(const Hypothesis& h, const Hypothesis& h_s, const Dataset& s,
                        const Dataset& t, const DiscrepancyReport& sdisc,
                        const TargetOracle& oracle = {});
BoundReport bound_ineq3(const Hypothesis& h, const Hypothesis& h_s, const Dataset& s,
                        const Dataset& t, const DiscrepancyReport& disc,
                        const TargetOracle& oracle = {});

// Throws ContractError unless loss.triangle.
BoundReport bound_thm1(const Hypothesis& h, const Hypothesis& h1, const Hypothesis& h2,
                       const Dataset& t, const LossSpec& loss, const TargetOracle& oracle = {});

// Deviation of the empirical PHD of the learned pair from the PHD of the
// true minimizers: 3R + 3 sqrt(log(12/delta)/2n) + R(h1_hat, h1*) + R(h2_hat, h2*).
BoundReport bound_thm2_dev(const Hypothesis& h1_hat, const Hypothesis& h2_hat,
                           const Hypothesis& h1_star, const Hypothesis& h2_star, const Dataset& t,
                           const RademacherEstimate& rad, double delta = 0.05);

struct LearnedPair {
  const Hypothesis* h1_hat = nullptr;
  const Hypothesis* h2_hat = nullptr;
  const Hypothesis* h1_star = nullptr;
  const Hypothesis* h2_star = nullptr;
};

BoundReport bound_thm3(const Hypothesis& h, const LearnedPair& pair, const Dataset& t,
                       const RademacherEstimate& rad_h, const RademacherEstimate& rad_h_prime,
                       double delta = 0.05, const TargetOracle& oracle = {});

BoundReport bound_thm4(const Hypothesis& h, const Hypothesis& h1, const Hypothesis& h2,
                       const Dataset& t, const RademacherEstimate& rad, double delta = 0.05,
                       const TargetOracle& oracle = {});

// Multiclass margin form; reference labels are the argmax of h1. Throws
// ContractError when rho <= 0 or k < 2.
BoundReport bound_thm6_margin(const Hypothesis& h, const Hypothesis& h1, const Hypothesis& h2,
                              const Dataset& t, double rho, int k,
                              const RademacherEstimate& rad_pi1, double delta = 0.05,
                              const TargetOracle& oracle = {});

}  // namespace phd
