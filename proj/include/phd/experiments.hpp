#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "phd/adapt.hpp"
#include "phd/data.hpp"
#include "phd/report.hpp"

namespace phd {

// Desk-scale experiment protocols. Every table is a pure function of its
// config; seeds are derived from `seed` with child streams, one per trial.

// Two independent draws from one binary generator (identical domains).
struct IdenticalConfig {
  std::size_t seeds = 10;
  std::size_t n = 2000;
  std::size_t d = 20;
  double nuisance_std = 1.0;
  std::size_t width = 64;
  std::size_t epochs = 30;
  double learning_rate = 1e-3;
  double ssl_fraction = 0.5;  // target rows used to train h_SSL; the rest measure PHD
  std::uint64_t seed = 0;

  void validate() const;
};

struct IdenticalRun {
  std::uint64_t seed = 0;
  // stump class (exact suprema) and linear models (PHD)
  double dh_exact = 0.0, sdisc_exact = 0.0, phd_linear = 0.0;
  // MLP class (adversarial suprema) and MLP models (PHD)
  double dh_adv = 0.0, sdisc_adv = 0.0, phd_mlp = 0.0;
  double source_accuracy = 0.0;  // MLP h_S on the labeled target rows
  BoundReport thm1, ineq2;       // h = h_S, h1 = h_S, h2 = h_SSL
};

std::vector<IdenticalRun> identical_domain_runs(const IdenticalConfig& cfg);
Table table1(const std::vector<IdenticalRun>& runs);
Table table2(const std::vector<IdenticalRun>& runs);

// Source of k blobs in the first `informative` coordinates with constant
// remaining coordinates; the unrelated target has its own blob layout and
// labels in those remaining coordinates and sits at the source's center in
// the informative ones.
struct UnrelatedConfig {
  std::size_t seeds = 10;
  std::size_t n = 2000;
  std::size_t d = 20;
  int k = 10;
  std::size_t informative = 4;
  double blob_radius = 3.0;
  std::size_t width = 64;
  std::size_t epochs = 30;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;

  void validate() const;
};

std::pair<Dataset, Dataset> unrelated_pair(const UnrelatedConfig& cfg, std::size_t n,
                                           std::uint64_t seed);
Table table3(const UnrelatedConfig& cfg);

// Pool of clean and noisy sources around a k-blob target. Clean sources are
// target draws translated by a per-source offset in the nuisance
// coordinates (length uniform in [0, style_max]); noisy sources are clean
// sources plus N(0, sigma^2) on every feature. Even indices are clean.
struct SelectionExperimentConfig {
  std::size_t seeds = 10;
  std::vector<double> sigmas{0.1, 0.3, 0.5};
  std::size_t sources = 10;
  std::size_t n_source = 300;
  std::size_t n_target = 600;
  std::size_t d = 20;
  int k = 10;
  std::size_t informative = 4;
  double blob_std = 0.3;
  double blob_radius = 1.5;
  double style_max = 3.0;
  std::size_t width = 32;
  std::size_t epochs = 50;
  double learning_rate = 1e-2;
  double weight_decay = 1e-3;
  std::size_t ssl_rounds = 2;
  std::size_t top_k = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SourcePool {
  std::vector<Dataset> sources;
  std::vector<bool> clean;
  Dataset target;  // labeled; labels are diagnostic only
};

SourcePool make_source_pool(const SelectionExperimentConfig& cfg, double sigma,
                            std::uint64_t seed);
SelectionConfig selection_config(const SelectionExperimentConfig& cfg, SelectionMeasure m,
                                 std::uint64_t seed);

struct Fig2Result {
  Table runs;     // sigma, measure, seed, score, accuracy
  Table summary;  // sigma, measure, mean_score, sd_score, mean_accuracy
};
Fig2Result fig2(const SelectionExperimentConfig& cfg);

// Learned-pair PHD against the PHD of minimizers fit on a much larger draw.
// h1 is stump ERM on the source, h2 stump ERM on the labeled target.
struct ConvergenceConfig {
  std::size_t seeds = 50;
  std::vector<std::size_t> sizes{50, 200, 800, 3200};
  std::size_t star_factor = 20;  // star draw size = star_factor * max(sizes)
  std::size_t d = 2;
  double rotate = 1.0;  // large enough that the target-optimal stump uses the other feature
  std::uint64_t seed = 0;

  void validate() const;
};
Table thm2_convergence(const ConvergenceConfig& cfg);

// Stump-class trials of the fixed-pair bound with the left-hand side measured
// against oracle target labels on a large fresh draw.
struct ValidityConfig {
  std::size_t trials = 200;
  std::size_t n = 200;
  std::size_t oracle_n = 20000;
  std::size_t d = 2;
  double rotate = 0.6;
  double delta = 0.05;
  std::size_t rademacher_draws = 200;
  std::uint64_t seed = 0;

  void validate() const;
};
Table thm4_validity(const ValidityConfig& cfg);

// Tri-training against the source-only model on identical separable blobs.
struct TriTrainExperimentConfig {
  std::size_t seeds = 10;
  std::size_t n = 1000;
  std::size_t d = 10;
  std::size_t width = 32;
  std::size_t source_epochs = 30;
  std::size_t refine_epochs = 5;
  std::size_t rounds = 3;
  std::size_t rademacher_draws = 4;
  std::uint64_t seed = 0;

  void validate() const;
};
// One row per (seed, round) plus the source-only accuracy on the same rows.
Table tritrain_blobs(const TriTrainExperimentConfig& cfg);

}  // namespace phd
