#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "phd/data.hpp"
#include "phd/numkit.hpp"

namespace phd {

enum class ArchKind { linear, mlp };

// Fully connected network. Binary tasks have one output (a signed score);
// k-class tasks have k outputs. Hidden layers apply batch norm (optional)
// before a leaky ReLU.
struct Architecture {
  ArchKind kind = ArchKind::linear;
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;  // empty for linear
  bool batch_norm = true;
  std::size_t outputs = 1;
  double slope = 0.1;

  static Architecture linear(std::size_t input_dim, int k = 2);
  static Architecture mlp(std::size_t input_dim, std::vector<std::size_t> hidden, int k = 2,
                          bool batch_norm = true);

  int classes() const noexcept { return outputs == 1 ? 2 : static_cast<int>(outputs); }
  std::size_t layers() const noexcept { return hidden.size() + 1; }
  std::size_t fan_in(std::size_t layer) const;
  std::size_t fan_out(std::size_t layer) const;
  bool normalized(std::size_t layer) const noexcept {
    return batch_norm && layer < hidden.size();
  }
  // Parameters per layer: W (fan_in x fan_out, row-major) then either a bias
  // or, for normalized layers, gamma and beta.
  std::size_t param_count() const;
  std::size_t layer_offset(std::size_t layer) const;
  std::size_t stat_count() const;  // running mean + variance entries
  void validate() const;
  std::string describe() const;

  bool operator==(const Architecture&) const = default;
};

struct LossSpec {
  enum class Kind { zero_one, margin, logistic, softmax_ce };
  Kind kind = Kind::zero_one;
  double rho = 0.0;
  double bound = 1.0;  // M
  bool triangle = true;

  static LossSpec zero_one() { return {Kind::zero_one, 0.0, 1.0, true}; }
  static LossSpec margin(double rho);
  static LossSpec logistic() {
    return {Kind::logistic, 0.0, std::numeric_limits<double>::infinity(), false};
  }
  static LossSpec softmax_ce() {
    return {Kind::softmax_ce, 0.0, std::numeric_limits<double>::infinity(), false};
  }
  // Logistic for binary outputs, cross-entropy otherwise.
  static LossSpec surrogate_for(const Architecture& arch);

  bool differentiable() const noexcept {
    return kind == Kind::logistic || kind == Kind::softmax_ce;
  }
  std::string name() const;
};

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// What the trainer did; carried along for serialization.
struct Provenance {
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  std::size_t batch_size = 0;
  double learning_rate = 0.0;
  double weight_decay = 0.0;
  std::size_t samples = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  bool trained = false;
};

class Hypothesis {
 public:
  Hypothesis() = default;
  Hypothesis(Architecture arch, std::vector<double> params, std::vector<double> stats = {});

  // Weights drawn from `seed`: He-uniform for hidden layers, U(+-1/sqrt(fan_in))
  // for the output layer; gamma 1, beta 0, running mean 0 / variance 1.
  static Hypothesis initialize(const Architecture& arch, std::uint64_t seed);
  // Linear hypothesis predicting `label` everywhere.
  static Hypothesis constant(std::size_t input_dim, int label, int k = 2);
  // Binary linear scorer w.x + b.
  static Hypothesis linear(std::vector<double> weights, double bias);

  const Architecture& arch() const noexcept { return arch_; }
  int classes() const noexcept { return arch_.classes(); }
  std::span<const double> params() const noexcept { return params_; }
  std::span<double> params() noexcept { return params_; }
  // Batch-norm running statistics: per normalized layer, mean then variance.
  std::span<const double> stats() const noexcept { return stats_; }
  std::span<double> stats() noexcept { return stats_; }
  const Provenance& provenance() const noexcept { return provenance_; }
  void set_provenance(const Provenance& p) { provenance_ = p; }

  // n x outputs scores, batch norm in inference mode.
  Matrix scores(const Matrix& x) const;
  // Binary: [score >= 0]; multiclass: first argmax.
  std::vector<int> predict(const Matrix& x) const;
  // Probability of the predicted class (sigmoid / softmax).
  std::vector<double> confidence(const Matrix& x) const;

  bool operator==(const Hypothesis& o) const {
    return arch_ == o.arch_ && params_ == o.params_ && stats_ == o.stats_;
  }

 private:
  Architecture arch_;
  std::vector<double> params_;
  std::vector<double> stats_;
  Provenance provenance_;
};

std::vector<int> predictions_from_scores(const Matrix& scores);

// Reference labels: explicit labels or another hypothesis' predictions.
using Labeler = std::variant<std::span<const int>, const Hypothesis*>;

// Mean loss of h against the labeler on D. Margin loss counts rows where
// the score of the reference class beats every other class by at most rho;
// for one-output binary scorers the margin is the signed score s * h(x) with
// s = +1 for class 1 and -1 for class 0.
double empirical_risk(const Hypothesis& h, const Labeler& labeler, const Dataset& d,
                      const LossSpec& loss);
double empirical_risk(const Hypothesis& h, const Labeler& labeler, const Matrix& x,
                      const LossSpec& loss);
// Same on precomputed predictions / scores.
double disagreement(std::span<const int> a, std::span<const int> b);
double margin_risk(const Matrix& scores, std::span<const int> reference, double rho);

// Adam with the AMSGrad maximum, matching the common reference update:
// m <- b1 m + (1-b1) g, v <- b2 v + (1-b2) g^2, vmax <- max(vmax, v),
// p <- p - lr/(1-b1^t) * m / (sqrt(vmax)/sqrt(1-b2^t) + eps).
class AmsGrad {
 public:
  AmsGrad(std::size_t size, double lr, double weight_decay = 0.0, double beta1 = 0.9,
          double beta2 = 0.999, double eps = 1e-8);
  void step(std::span<double> params, std::span<const double> grad);
  std::span<const double> vmax() const noexcept { return vmax_; }
  std::size_t steps() const noexcept { return t_; }

 private:
  double lr_, wd_, b1_, b2_, eps_;
  std::size_t t_ = 0;
  std::vector<double> m_, v_, vmax_;
};

struct FitOptions {
  std::span<const double> weights;       // per-row loss weights, empty = uniform
  const Hypothesis* warm_start = nullptr;  // start from these parameters
  // Called after every epoch with the current (inference-mode) hypothesis.
  std::function<void(std::size_t epoch, const Hypothesis&)> on_epoch;
};

// Minibatch AMSGrad on the surrogate. Deterministic given cfg.seed. The
// returned hypothesis never has a larger full-data surrogate loss than the
// starting point (it falls back to the start otherwise).
Hypothesis fit(const Dataset& d, const Architecture& arch, const TrainConfig& cfg,
               const LossSpec& surrogate, const FitOptions& options = {});

Hypothesis train_erm(const Dataset& d, const Architecture& arch, const TrainConfig& cfg,
                     const LossSpec& surrogate);

// Full-batch surrogate loss and its gradient (batch norm in training mode).
double loss_and_gradient(const Hypothesis& h, const Matrix& x, std::span<const int> labels,
                         std::span<const double> weights, const LossSpec& surrogate,
                         std::vector<double>& grad);

// Max relative error |a - n| / max(|a|, |n|, 1e-6) between the analytic and
// central-difference gradient at a seeded initialization.
double grad_check(const Architecture& arch, const LossSpec& loss, const Dataset& probe,
                  double eps = 1e-5, std::uint64_t seed = 0);

// Binary blob "PHDH" v1 plus a JSON sidecar at path + ".json".
void save_hypothesis(const Hypothesis& h, const std::string& path);
Hypothesis load_hypothesis(const std::string& path);

}  // namespace phd
