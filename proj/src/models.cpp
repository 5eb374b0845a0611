#include "phd/models.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "phd/error.hpp"
#include "phd/kernels.hpp"

namespace phd {

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.9;

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

// ---- Architecture ----------------------------------------------------------

Architecture Architecture::linear(std::size_t input_dim, int k) {
  Architecture a;
  a.kind = ArchKind::linear;
  a.input_dim = input_dim;
  a.batch_norm = false;
  a.outputs = k <= 2 ? 1 : static_cast<std::size_t>(k);
  return a;
}

Architecture Architecture::mlp(std::size_t input_dim, std::vector<std::size_t> hidden, int k,
                               bool batch_norm) {
  Architecture a;
  a.kind = ArchKind::mlp;
  a.input_dim = input_dim;
  a.hidden = std::move(hidden);
  a.batch_norm = batch_norm;
  a.outputs = k <= 2 ? 1 : static_cast<std::size_t>(k);
  return a;
}

std::size_t Architecture::fan_in(std::size_t layer) const {
  return layer == 0 ? input_dim : hidden[layer - 1];
}

std::size_t Architecture::fan_out(std::size_t layer) const {
  return layer < hidden.size() ? hidden[layer] : outputs;
}

std::size_t Architecture::layer_offset(std::size_t layer) const {
  std::size_t off = 0;
  for (std::size_t l = 0; l < layer; ++l)
    off += fan_in(l) * fan_out(l) + fan_out(l) * (normalized(l) ? 2 : 1);
  return off;
}

std::size_t Architecture::param_count() const { return layer_offset(layers()); }

std::size_t Architecture::stat_count() const {
  std::size_t s = 0;
  for (std::size_t l = 0; l < hidden.size(); ++l)
    if (normalized(l)) s += 2 * hidden[l];
  return s;
}

void Architecture::validate() const {
  if (input_dim == 0) throw ContractError("architecture input dimension must be >= 1");
  if (outputs == 0) throw ContractError("architecture needs at least one output");
  if (kind == ArchKind::linear && !hidden.empty())
    throw ContractError("linear architecture cannot have hidden layers");
  if (kind == ArchKind::mlp && hidden.empty())
    throw ContractError("mlp architecture needs at least one hidden layer");
  for (auto w : hidden)
    if (w == 0) throw ContractError("hidden width must be >= 1");
  if (!(slope >= 0.0 && slope < 1.0)) throw ContractError("leaky slope must be in [0, 1)");
}

std::string Architecture::describe() const {
  std::ostringstream s;
  s << (kind == ArchKind::linear ? "linear" : "mlp") << '(' << input_dim;
  for (auto w : hidden) s << '-' << w;
  s << '-' << outputs << (batch_norm && !hidden.empty() ? ",bn" : "") << ')';
  return s.str();
}

// ---- LossSpec / TrainConfig ---------------------------------------------------

LossSpec LossSpec::margin(double rho) {
  if (!(rho > 0.0)) throw ContractError("margin loss needs rho > 0");
  return {Kind::margin, rho, 1.0, false};
}

LossSpec LossSpec::surrogate_for(const Architecture& arch) {
  return arch.outputs == 1 ? logistic() : softmax_ce();
}

std::string LossSpec::name() const {
  switch (kind) {
    case Kind::zero_one: return "zero-one";
    case Kind::margin: return "margin";
    case Kind::logistic: return "logistic";
    case Kind::softmax_ce: return "softmax-cross-entropy";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be >= 0");
}

// ---- Hypothesis ------------------------------------------------------------

Hypothesis::Hypothesis(Architecture arch, std::vector<double> params, std::vector<double> stats)
    : arch_(std::move(arch)), params_(std::move(params)), stats_(std::move(stats)) {
  arch_.validate();
  if (params_.size() != arch_.param_count())
    throw ContractError("parameter count " + std::to_string(params_.size()) +
                        " does not match " + arch_.describe());
  if (stats_.empty()) {
    stats_.assign(arch_.stat_count(), 0.0);
    std::size_t off = 0;
    for (std::size_t l = 0; l < arch_.hidden.size(); ++l) {
      if (!arch_.normalized(l)) continue;
      const auto w = arch_.hidden[l];
      std::fill_n(stats_.begin() + static_cast<std::ptrdiff_t>(off + w), w, 1.0);
      off += 2 * w;
    }
  }
  if (stats_.size() != arch_.stat_count()) throw ContractError("batch-norm statistics mismatch");
}

Hypothesis Hypothesis::initialize(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  Rng rng(seed);
  std::vector<double> p(arch.param_count(), 0.0);
  for (std::size_t l = 0; l < arch.layers(); ++l) {
    const auto in = arch.fan_in(l);
    const auto out = arch.fan_out(l);
    const bool last = l + 1 == arch.layers();
    const double limit = last ? 1.0 / std::sqrt(static_cast<double>(in))
                              : std::sqrt(6.0 / static_cast<double>(in));
    double* w = p.data() + arch.layer_offset(l);
    for (std::size_t i = 0; i < in * out; ++i) w[i] = rng.uniform(-limit, limit);
    if (arch.normalized(l)) std::fill_n(w + in * out, out, 1.0);
  }
  return Hypothesis(arch, std::move(p));
}

Hypothesis Hypothesis::constant(std::size_t input_dim, int label, int k) {
  const auto arch = Architecture::linear(input_dim, k);
  if (label < 0 || label >= arch.classes()) throw ContractError("constant label out of range");
  std::vector<double> p(arch.param_count(), 0.0);
  double* bias = p.data() + input_dim * arch.outputs;
  if (arch.outputs == 1)
    bias[0] = label == 1 ? 1.0 : -1.0;
  else
    bias[label] = 1.0;
  return Hypothesis(arch, std::move(p));
}

Hypothesis Hypothesis::linear(std::vector<double> weights, double bias) {
  const auto arch = Architecture::linear(weights.size(), 2);
  weights.push_back(bias);
  return Hypothesis(arch, std::move(weights));
}

Matrix Hypothesis::scores(const Matrix& x) const {
  if (x.cols() != arch_.input_dim)
    throw ContractError("feature dimension " + std::to_string(x.cols()) + " does not match " +
                        arch_.describe());
  const std::size_t n = x.rows();
  Matrix a = x;
  std::size_t stat_off = 0;
  for (std::size_t l = 0; l < arch_.layers(); ++l) {
    const auto in = arch_.fan_in(l);
    const auto out = arch_.fan_out(l);
    const double* w = params_.data() + arch_.layer_offset(l);
    Matrix z(n, out);
    kernels::parallel::gemm_nn(n, in, out, a.data().data(), w, z.data().data());
    const double* tail = w + in * out;
    if (arch_.normalized(l)) {
      const double* mean = stats_.data() + stat_off;
      const double* var = mean + out;
      stat_off += 2 * out;
      std::vector<double> scale(out), shift(out);
      for (std::size_t j = 0; j < out; ++j) {
        scale[j] = tail[j] / std::sqrt(var[j] + kBnEps);
        shift[j] = tail[out + j] - mean[j] * scale[j];
      }
      for (std::size_t i = 0; i < n; ++i) {
        auto r = z.row(i);
        for (std::size_t j = 0; j < out; ++j) r[j] = r[j] * scale[j] + shift[j];
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        auto r = z.row(i);
        for (std::size_t j = 0; j < out; ++j) r[j] += tail[j];
      }
    }
    if (l + 1 < arch_.layers())
      for (double& v : z.data()) v = v >= 0.0 ? v : arch_.slope * v;
    a = std::move(z);
  }
  return a;
}

std::vector<int> predictions_from_scores(const Matrix& s) {
  std::vector<int> out(s.rows());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    auto r = s.row(i);
    if (r.size() == 1) {
      out[i] = r[0] >= 0.0 ? 1 : 0;
    } else {
      out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
    }
  }
  return out;
}

std::vector<int> Hypothesis::predict(const Matrix& x) const {
  return predictions_from_scores(scores(x));
}

std::vector<double> Hypothesis::confidence(const Matrix& x) const {
  const Matrix s = scores(x);
  std::vector<double> out(s.rows());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    auto r = s.row(i);
    if (r.size() == 1) {
      const double p = sigmoid(r[0]);
      out[i] = std::max(p, 1.0 - p);
    } else {
      const double mx = *std::max_element(r.begin(), r.end());
      double z = 0.0;
      for (double v : r) z += std::exp(v - mx);
      out[i] = 1.0 / z;
    }
  }
  return out;
}

// ---- risks -----------------------------------------------------------------

namespace {

std::vector<int> reference_labels(const Labeler& labeler, const Matrix& x) {
  if (const auto* h = std::get_if<const Hypothesis*>(&labeler)) {
    if (*h == nullptr) throw ContractError("null labeling hypothesis");
    return (*h)->predict(x);
  }
  const auto labels = std::get<std::span<const int>>(labeler);
  if (labels.size() != x.rows())
    throw ContractError("label count " + std::to_string(labels.size()) +
                        " does not match row count " + std::to_string(x.rows()));
  return {labels.begin(), labels.end()};
}

// Per-row surrogate loss of a score row against label y; writes dl/dscore
// into `dz` when non-null.
double surrogate_row(std::span<const double> z, int y, double* dz) {
  if (z.size() == 1) {
    const double s = y == 1 ? 1.0 : -1.0;
    if (dz) dz[0] = -s * sigmoid(-s * z[0]);
    return softplus(-s * z[0]);
  }
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  if (dz) {
    for (std::size_t j = 0; j < z.size(); ++j) dz[j] = std::exp(z[j] - lse);
    dz[y] -= 1.0;
  }
  return lse - z[static_cast<std::size_t>(y)];
}

void check_labels(std::span<const int> labels, const Architecture& arch) {
  for (int v : labels)
    if (v < 0 || v >= arch.classes())
      throw ContractError("label " + std::to_string(v) + " outside the " +
                          std::to_string(arch.classes()) + " classes of " + arch.describe());
}

}  // namespace

double disagreement(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw ContractError("prediction length mismatch");
  if (a.empty()) throw DegenerateInputError("disagreement over zero rows");
  std::size_t diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += a[i] != b[i];
  return static_cast<double>(diff) / static_cast<double>(a.size());
}

double margin_risk(const Matrix& scores, std::span<const int> reference, double rho) {
  if (!(rho > 0.0)) throw ContractError("margin loss needs rho > 0");
  if (scores.rows() != reference.size()) throw ContractError("reference length mismatch");
  if (scores.rows() == 0) throw DegenerateInputError("margin risk over zero rows");
  std::size_t count = 0;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    auto r = scores.row(i);
    const int y = reference[i];
    double margin;
    if (r.size() == 1) {
      margin = (y == 1 ? 1.0 : -1.0) * r[0];
    } else {
      double other = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < r.size(); ++j)
        if (static_cast<int>(j) != y) other = std::max(other, r[j]);
      margin = r[static_cast<std::size_t>(y)] - other;
    }
    count += margin <= rho;
  }
  return static_cast<double>(count) / static_cast<double>(scores.rows());
}

double empirical_risk(const Hypothesis& h, const Labeler& labeler, const Matrix& x,
                      const LossSpec& loss) {
  if (x.rows() == 0) throw DegenerateInputError("empirical risk over an empty dataset");
  if (const auto* g = std::get_if<const Hypothesis*>(&labeler); g && *g &&
      (*g)->arch().input_dim != x.cols())
    throw ContractError("labeling hypothesis input dimension does not match the data");
  const auto ref = reference_labels(labeler, x);
  switch (loss.kind) {
    case LossSpec::Kind::zero_one: return disagreement(h.predict(x), ref);
    case LossSpec::Kind::margin: return margin_risk(h.scores(x), ref, loss.rho);
    default: {
      check_labels(ref, h.arch());
      const Matrix s = h.scores(x);
      KahanSum sum;
      for (std::size_t i = 0; i < s.rows(); ++i) sum.add(surrogate_row(s.row(i), ref[i], nullptr));
      return sum.value() / static_cast<double>(s.rows());
    }
  }
}

double empirical_risk(const Hypothesis& h, const Labeler& labeler, const Dataset& d,
                      const LossSpec& loss) {
  return empirical_risk(h, labeler, d.x, loss);
}

// ---- AMSGrad ---------------------------------------------------------------

AmsGrad::AmsGrad(std::size_t size, double lr, double weight_decay, double beta1, double beta2,
                 double eps)
    : lr_(lr), wd_(weight_decay), b1_(beta1), b2_(beta2), eps_(eps), m_(size, 0.0),
      v_(size, 0.0), vmax_(size, 0.0) {}

void AmsGrad::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw ContractError("optimizer state size mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double bc2 = std::sqrt(1.0 - std::pow(b2_, static_cast<double>(t_)));
  const double step = lr_ / bc1;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i] + wd_ * params[i];
    m_[i] = b1_ * m_[i] + (1.0 - b1_) * g;
    v_[i] = b2_ * v_[i] + (1.0 - b2_) * g * g;
    vmax_[i] = std::max(vmax_[i], v_[i]);
    params[i] -= step * m_[i] / (std::sqrt(vmax_[i]) / bc2 + eps_);
  }
}

// ---- training-mode forward / backward --------------------------------------

namespace {

struct LayerTape {
  Matrix input;               // activation entering the layer
  Matrix xhat;                // normalized pre-activation (normalized layers)
  Matrix pre;                 // value fed to the activation
  std::vector<double> invstd;
};

// Batch forward with batch-norm batch statistics. When `stats` is non-null
// the running statistics are updated.
Matrix forward_train(const Architecture& arch, std::span<const double> params, const Matrix& x,
                     std::vector<LayerTape>& tape, std::vector<double>* stats) {
  const std::size_t n = x.rows();
  tape.resize(arch.layers());
  Matrix a = x;
  std::size_t stat_off = 0;
  for (std::size_t l = 0; l < arch.layers(); ++l) {
    const auto in = arch.fan_in(l);
    const auto out = arch.fan_out(l);
    const double* w = params.data() + arch.layer_offset(l);
    const double* tail = w + in * out;
    auto& t = tape[l];
    Matrix z(n, out);
    kernels::parallel::gemm_nn(n, in, out, a.data().data(), w, z.data().data());
    if (arch.normalized(l)) {
      std::vector<double> mean(out, 0.0), var(out, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        auto r = z.row(i);
        for (std::size_t j = 0; j < out; ++j) mean[j] += r[j];
      }
      for (double& m : mean) m /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        auto r = z.row(i);
        for (std::size_t j = 0; j < out; ++j) var[j] += (r[j] - mean[j]) * (r[j] - mean[j]);
      }
      t.invstd.resize(out);
      for (std::size_t j = 0; j < out; ++j)
        t.invstd[j] = 1.0 / std::sqrt(var[j] / static_cast<double>(n) + kBnEps);
      t.xhat = Matrix(n, out);
      for (std::size_t i = 0; i < n; ++i) {
        auto r = z.row(i);
        auto xh = t.xhat.row(i);
        for (std::size_t j = 0; j < out; ++j) {
          xh[j] = (r[j] - mean[j]) * t.invstd[j];
          r[j] = tail[j] * xh[j] + tail[out + j];
        }
      }
      if (stats) {
        double* rm = stats->data() + stat_off;
        double* rv = rm + out;
        const double unbias = n > 1 ? 1.0 / static_cast<double>(n - 1) : 0.0;
        for (std::size_t j = 0; j < out; ++j) {
          rm[j] = kBnMomentum * rm[j] + (1.0 - kBnMomentum) * mean[j];
          if (n > 1) rv[j] = kBnMomentum * rv[j] + (1.0 - kBnMomentum) * var[j] * unbias;
        }
      }
      stat_off += 2 * out;
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        auto r = z.row(i);
        for (std::size_t j = 0; j < out; ++j) r[j] += tail[j];
      }
    }
    t.input = std::move(a);
    if (l + 1 < arch.layers()) {
      t.pre = z;
      for (double& v : z.data()) v = v >= 0.0 ? v : arch.slope * v;
    }
    a = std::move(z);
  }
  return a;
}

// dz: gradient of the loss w.r.t. the output scores (n x outputs).
void backward(const Architecture& arch, std::span<const double> params,
              const std::vector<LayerTape>& tape, Matrix dz, std::vector<double>& grad) {
  grad.assign(params.size(), 0.0);
  for (std::size_t l = arch.layers(); l-- > 0;) {
    const auto in = arch.fan_in(l);
    const auto out = arch.fan_out(l);
    const auto& t = tape[l];
    const std::size_t n = dz.rows();
    const std::size_t off = arch.layer_offset(l);
    const double* w = params.data() + off;
    double* gw = grad.data() + off;
    double* gtail = gw + in * out;
    if (l + 1 < arch.layers()) {
      // through the leaky ReLU (derivative 1 at 0)
      for (std::size_t i = 0; i < n * out; ++i)
        if (t.pre.data()[i] < 0.0) dz.data()[i] *= arch.slope;
    }
    if (arch.normalized(l)) {
      const double* gamma = w + in * out;
      std::vector<double> sum_dxh(out, 0.0), sum_dxh_xh(out, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        auto d = dz.row(i);
        auto xh = t.xhat.row(i);
        for (std::size_t j = 0; j < out; ++j) {
          gtail[j] += d[j] * xh[j];
          gtail[out + j] += d[j];
          const double dxh = d[j] * gamma[j];
          sum_dxh[j] += dxh;
          sum_dxh_xh[j] += dxh * xh[j];
        }
      }
      const double inv_n = 1.0 / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        auto d = dz.row(i);
        auto xh = t.xhat.row(i);
        for (std::size_t j = 0; j < out; ++j) {
          const double dxh = d[j] * gamma[j];
          d[j] = t.invstd[j] * inv_n *
                 (static_cast<double>(n) * dxh - sum_dxh[j] - xh[j] * sum_dxh_xh[j]);
        }
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        auto d = dz.row(i);
        for (std::size_t j = 0; j < out; ++j) gtail[j] += d[j];
      }
    }
    kernels::parallel::gemm_tn(in, n, out, t.input.data().data(), dz.data().data(), gw);
    if (l > 0) {
      Matrix da(n, in);
      kernels::parallel::gemm_nt(n, out, in, dz.data().data(), w, da.data().data());
      dz = std::move(da);
    }
  }
}

double batch_loss(const Matrix& out, std::span<const int> labels, std::span<const double> weights,
                  Matrix* dz) {
  const std::size_t n = out.rows();
  double wsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) wsum += weights.empty() ? 1.0 : weights[i];
  if (!(wsum > 0.0)) return 0.0;
  if (dz) *dz = Matrix(n, out.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = (weights.empty() ? 1.0 : weights[i]) / wsum;
    double* d = dz ? dz->row(i).data() : nullptr;
    total += wi * surrogate_row(out.row(i), labels[i], d);
    if (d)
      for (std::size_t j = 0; j < out.cols(); ++j) d[j] *= wi;
  }
  return total;
}

double full_loss(const Hypothesis& h, const Matrix& x, std::span<const int> labels,
                 std::span<const double> weights) {
  return batch_loss(h.scores(x), labels, weights, nullptr);
}

}  // namespace

double loss_and_gradient(const Hypothesis& h, const Matrix& x, std::span<const int> labels,
                         std::span<const double> weights, const LossSpec& surrogate,
                         std::vector<double>& grad) {
  if (!surrogate.differentiable()) throw ContractError("loss '" + surrogate.name() +
                                                       "' is not differentiable");
  if (labels.size() != x.rows()) throw ContractError("label count mismatch");
  if (!weights.empty() && weights.size() != x.rows()) throw ContractError("weight count mismatch");
  if (x.cols() != h.arch().input_dim) throw ContractError("feature dimension mismatch");
  check_labels(labels, h.arch());
  std::vector<LayerTape> tape;
  const Matrix out = forward_train(h.arch(), h.params(), x, tape, nullptr);
  Matrix dz;
  const double loss = batch_loss(out, labels, weights, &dz);
  backward(h.arch(), h.params(), tape, std::move(dz), grad);
  return loss;
}

Hypothesis fit(const Dataset& d, const Architecture& arch, const TrainConfig& cfg,
               const LossSpec& surrogate, const FitOptions& options) {
  cfg.validate();
  arch.validate();
  if (!surrogate.differentiable())
    throw ContractError("training needs a differentiable surrogate, got " + surrogate.name());
  if (d.size() == 0) throw DegenerateInputError("cannot train on an empty dataset");
  if (d.dim() != arch.input_dim) throw ContractError("dataset dimension does not match " +
                                                     arch.describe());
  const auto& labels = d.labels();
  check_labels(labels, arch);
  if (!options.weights.empty() && options.weights.size() != d.size())
    throw ContractError("weight count does not match row count");

  Hypothesis h = options.warm_start ? *options.warm_start : Hypothesis::initialize(arch, cfg.seed);
  if (!(h.arch() == arch)) throw ContractError("warm start architecture mismatch");
  const Hypothesis start = h;
  const double initial = full_loss(h, d.x, labels, options.weights);

  Rng order_rng = Rng(cfg.seed).child(0x5EED);
  AmsGrad opt(arch.param_count(), cfg.learning_rate, cfg.weight_decay);
  std::vector<double> stats(h.stats().begin(), h.stats().end());
  std::vector<double> grad;
  std::vector<LayerTape> tape;
  const std::size_t n = d.size();
  const std::size_t bs = std::min(cfg.batch_size, n);
  std::vector<int> yb;
  std::vector<double> wb;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto perm = order_rng.permutation(n);
    for (std::size_t start_row = 0; start_row < n;) {
      std::size_t end = std::min(start_row + bs, n);
      // a single trailing row would give degenerate batch statistics
      if (n - end == 1) end = n;
      const std::span<const std::size_t> idx(perm.data() + start_row, end - start_row);
      start_row = end;
      const Matrix xb = select_rows(d.x, idx);
      yb.resize(idx.size());
      wb.clear();
      for (std::size_t i = 0; i < idx.size(); ++i) {
        yb[i] = labels[idx[i]];
        if (!options.weights.empty()) wb.push_back(options.weights[idx[i]]);
      }
      if (!wb.empty() && std::all_of(wb.begin(), wb.end(), [](double w) { return w == 0.0; }))
        continue;
      const Matrix out = forward_train(arch, h.params(), xb, tape, &stats);
      Matrix dz;
      const double loss = batch_loss(out, yb, wb, &dz);
      if (!std::isfinite(loss)) throw TrainingError("surrogate loss is not finite", epoch + 1);
      backward(arch, h.params(), tape, std::move(dz), grad);
      opt.step(h.params(), grad);
    }
    std::copy(stats.begin(), stats.end(), h.stats().begin());
    for (double p : h.params())
      if (!std::isfinite(p)) throw TrainingError("parameters diverged", epoch + 1);
    if (options.on_epoch) options.on_epoch(epoch + 1, h);
  }

  double final_loss = full_loss(h, d.x, labels, options.weights);
  if (!std::isfinite(final_loss)) throw TrainingError("final loss is not finite", cfg.epochs);
  if (final_loss > initial) {
    h = start;
    final_loss = initial;
  }
  Provenance p;
  p.seed = cfg.seed;
  p.epochs = cfg.epochs;
  p.batch_size = cfg.batch_size;
  p.learning_rate = cfg.learning_rate;
  p.weight_decay = cfg.weight_decay;
  p.samples = n;
  p.initial_loss = initial;
  p.final_loss = final_loss;
  p.trained = true;
  h.set_provenance(p);
  return h;
}

Hypothesis train_erm(const Dataset& d, const Architecture& arch, const TrainConfig& cfg,
                     const LossSpec& surrogate) {
  return fit(d, arch, cfg, surrogate);
}

double grad_check(const Architecture& arch, const LossSpec& loss, const Dataset& probe, double eps,
                  std::uint64_t seed) {
  if (!(eps > 0.0)) throw ContractError("grad_check needs eps > 0");
  Hypothesis h = Hypothesis::initialize(arch, seed);
  const auto& labels = probe.labels();
  std::vector<double> analytic;
  loss_and_gradient(h, probe.x, labels, {}, loss, analytic);
  std::vector<double> scratch;
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double keep = h.params()[i];
    h.params()[i] = keep + eps;
    const double up = loss_and_gradient(h, probe.x, labels, {}, loss, scratch);
    h.params()[i] = keep - eps;
    const double down = loss_and_gradient(h, probe.x, labels, {}, loss, scratch);
    h.params()[i] = keep;
    const double numeric = (up - down) / (2.0 * eps);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

// ---- serialization ---------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'P', 'H', 'D', 'H'};
constexpr std::uint32_t kFormatVersion = 1;

class Writer {
 public:
  void u8(std::uint8_t v) { bytes.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  std::string bytes;
};

class Reader {
 public:
  explicit Reader(std::string data) : bytes_(std::move(data)) {}
  void need(std::size_t k) {
    if (pos_ + k > bytes_.size()) throw FormatError("truncated hypothesis blob", bytes_.size());
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{u8()} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{u8()} << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t pos() const { return pos_; }
  std::size_t size() const { return bytes_.size(); }

 private:
  std::string bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_hypothesis(const Hypothesis& h, const std::string& path) {
  const auto& a = h.arch();
  Writer w;
  w.bytes.append(kMagic, 4);
  w.u32(kFormatVersion);
  w.u8(a.kind == ArchKind::linear ? 0 : 1);
  w.u64(a.input_dim);
  w.u64(a.hidden.size());
  for (auto v : a.hidden) w.u64(v);
  w.u8(a.batch_norm ? 1 : 0);
  w.u64(a.outputs);
  w.f64(a.slope);
  w.u64(h.params().size());
  for (double v : h.params()) w.f64(v);
  w.u64(h.stats().size());
  for (double v : h.stats()) w.f64(v);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out.write(w.bytes.data(), static_cast<std::streamsize>(w.bytes.size()));

  const auto& p = h.provenance();
  nlohmann::ordered_json side;
  side["format"] = "phd-hypothesis";
  side["version"] = kFormatVersion;
  side["architecture"] = {{"kind", a.kind == ArchKind::linear ? "linear" : "mlp"},
                          {"input_dim", a.input_dim},
                          {"hidden", a.hidden},
                          {"batch_norm", a.batch_norm},
                          {"outputs", a.outputs},
                          {"slope", a.slope},
                          {"describe", a.describe()}};
  side["seed"] = p.seed;
  side["training"] = {{"trained", p.trained},       {"epochs", p.epochs},
                      {"batch_size", p.batch_size}, {"learning_rate", p.learning_rate},
                      {"weight_decay", p.weight_decay}, {"optimizer", "adam-amsgrad"},
                      {"samples", p.samples},       {"initial_loss", p.initial_loss},
                      {"final_loss", p.final_loss}};
  std::ofstream sidecar(path + ".json");
  if (!sidecar) throw ConfigError("cannot write '" + path + ".json'");
  sidecar << side.dump(2) << '\n';
}

Hypothesis load_hypothesis(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open hypothesis file '" + path + "'");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() < 4 || std::memcmp(data.data(), kMagic, 4) != 0)
    throw FormatError("'" + path + "' is not a hypothesis blob (bad magic)", 0);
  Reader r(data.substr(4));
  const auto version = r.u32();
  if (version != kFormatVersion)
    throw FormatError("unsupported hypothesis version " + std::to_string(version), 4);
  Architecture a;
  a.kind = r.u8() == 0 ? ArchKind::linear : ArchKind::mlp;
  a.input_dim = r.u64();
  const auto layers = r.u64();
  if (layers > 1024) throw FormatError("implausible hidden layer count", 4 + r.pos());
  for (std::uint64_t i = 0; i < layers; ++i) a.hidden.push_back(r.u64());
  a.batch_norm = r.u8() != 0;
  a.outputs = r.u64();
  a.slope = r.f64();
  const auto np = r.u64();
  if (np > r.size()) throw FormatError("parameter count exceeds file size", 4 + r.pos());
  std::vector<double> params(np);
  for (auto& v : params) v = r.f64();
  const auto ns = r.u64();
  if (ns > r.size()) throw FormatError("statistic count exceeds file size", 4 + r.pos());
  std::vector<double> stats(ns);
  for (auto& v : stats) v = r.f64();
  try {
    return Hypothesis(a, std::move(params), std::move(stats));
  } catch (const ContractError& e) {
    throw FormatError(std::string("inconsistent hypothesis blob: ") + e.what(), 4);
  }
}

}  // namespace phd
