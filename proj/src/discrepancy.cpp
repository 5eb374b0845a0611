#include "phd/discrepancy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include "phd/error.hpp"
#include "phd/kernels.hpp"

namespace phd {

std::string to_string(Method m) {
  switch (m) {
    case Method::closed_form: return "closed-form";
    case Method::adversarial: return "adversarial";
    case Method::exact_enumeration: return "exact-enumeration";
    case Method::assignment: return "assignment";
  }
  return "?";
}

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

void require_same_dim(const Dataset& s, const Dataset& t) {
  if (s.size() == 0 || t.size() == 0) throw DegenerateInputError("empty sample");
  if (s.dim() != t.dim()) throw ContractError("source and target feature dimensions differ");
}

std::vector<int> binary_reference(const Hypothesis& h, const Matrix& x) {
  if (h.classes() != 2) throw ContractError("reference hypothesis must be binary");
  return h.predict(x);
}

}  // namespace

// ---- stumps ----------------------------------------------------------------

std::string Stump::describe() const {
  if (constant) return "constant(" + std::to_string(label) + ")";
  return "stump(x" + std::to_string(feature) + (polarity > 0 ? " > " : " <= ") + fmt(threshold) +
         ")";
}

StumpClass StumpClass::from_sample(const Matrix& x) {
  StumpClass c;
  c.thresholds_.resize(x.cols());
  std::vector<double> col(x.rows());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    for (std::size_t i = 0; i < x.rows(); ++i) col[i] = x(i, f);
    std::sort(col.begin(), col.end());
    col.erase(std::unique(col.begin(), col.end()), col.end());
    auto& th = c.thresholds_[f];
    for (std::size_t i = 0; i + 1 < col.size(); ++i) th.push_back(0.5 * (col[i] + col[i + 1]));
    col.resize(x.rows());
  }
  return c;
}

StumpClass StumpClass::from_samples(const Matrix& a, const Matrix& b) {
  return from_sample(vstack(a, b));
}

std::size_t StumpClass::size() const noexcept {
  std::size_t n = 2;
  for (const auto& th : thresholds_) n += 2 * th.size();
  return n;
}

Stump StumpClass::at(std::size_t index) const {
  const std::size_t total = size();
  if (index >= total) throw ContractError("stump index out of range");
  if (index >= total - 2) return Stump{true, static_cast<int>(index - (total - 2)), 0, 0.0, 1};
  for (std::size_t f = 0; f < thresholds_.size(); ++f) {
    const std::size_t here = 2 * thresholds_[f].size();
    if (index < here) return Stump{false, 0, f, thresholds_[f][index / 2], index % 2 ? -1 : 1};
    index -= here;
  }
  throw ContractError("stump index out of range");
}

std::vector<int> StumpClass::predict(const Stump& s, const Matrix& x) {
  std::vector<int> out(x.rows(), s.label);
  if (s.constant) return out;
  if (s.feature >= x.cols()) throw ContractError("stump feature out of range");
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const bool above = x(i, s.feature) > s.threshold;
    out[i] = (s.polarity > 0) == above ? 1 : 0;
  }
  return out;
}

Hypothesis StumpClass::hypothesis(const Stump& s, std::size_t dim) {
  if (s.constant) return Hypothesis::constant(dim, s.label);
  std::vector<double> w(dim, 0.0);
  w[s.feature] = s.polarity > 0 ? 1.0 : -1.0;
  return Hypothesis::linear(std::move(w), s.polarity > 0 ? -s.threshold : s.threshold);
}

namespace {

struct Candidate {
  double value = 0.0;
  std::size_t index = 0;  // canonical class index
  bool set = false;
};

void offer(Candidate& best, double value, std::size_t index, bool maximize) {
  const bool better = maximize ? value > best.value : value < best.value;
  if (!best.set || better || (value == best.value && index < best.index)) {
    best = {value, index, true};
  }
}

struct Extremes {
  Candidate max, min;
};

// Signed statistic sum_i a_i 1{h(x_i) != r_i} at its largest and smallest
// over the class.
Extremes stump_extremes(const StumpClass& cls, const Matrix& x, std::span<const double> a,
                        std::span<const int> r) {
  if (x.cols() != cls.dim()) throw ContractError("stump class dimension mismatch");
  if (a.size() != x.rows() || r.size() != x.rows()) throw ContractError("weight length mismatch");
  double c1 = 0.0, c0 = 0.0;
  std::vector<double> u(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (r[i] != 0 && r[i] != 1) throw ContractError("stump statistics need binary references");
    c1 += a[i] * r[i];
    c0 += a[i] * (1 - r[i]);
    u[i] = a[i] * (1 - 2 * r[i]);
  }
  const auto cols = kernels::sort_columns(x);
  const auto ext = kernels::parallel::suffix_extrema(cols, cls.thresholds(), u);
  Extremes e;
  std::size_t base = 0;
  for (std::size_t f = 0; f < cls.dim(); ++f) {
    const auto& fx = ext[f];
    if (fx.any) {
      // polarity + : c1 + U ; polarity - : c0 - U
      offer(e.max, c1 + fx.max_value, base + 2 * fx.max_index, true);
      offer(e.max, c0 - fx.min_value, base + 2 * fx.min_index + 1, true);
      offer(e.min, c1 + fx.min_value, base + 2 * fx.min_index, false);
      offer(e.min, c0 - fx.max_value, base + 2 * fx.max_index + 1, false);
    }
    base += 2 * cls.thresholds()[f].size();
  }
  // constant 0 disagrees where r = 1, constant 1 where r = 0
  for (int label = 0; label < 2; ++label) {
    const double v = label == 0 ? c1 : c0;
    const std::size_t idx = base + static_cast<std::size_t>(label);
    if (!e.max.set || v > e.max.value) e.max = {v, idx, true};
    if (!e.min.set || v < e.min.value) e.min = {v, idx, true};
  }
  return e;
}

}  // namespace

StumpOptimum best_stump(const StumpClass& cls, const Matrix& x, std::span<const double> a,
                        std::span<const int> reference, bool absolute) {
  const auto e = stump_extremes(cls, x, a, reference);
  Candidate pick = e.max;
  if (absolute) {
    const double hi = std::abs(e.max.value);
    const double lo = std::abs(e.min.value);
    if (lo > hi || (lo == hi && e.min.index < e.max.index)) pick = e.min;
  }
  return {pick.value, cls.at(pick.index)};
}

Stump stump_erm(const StumpClass& cls, const Dataset& d) {
  if (d.size() == 0) throw DegenerateInputError("stump ERM needs a non-empty sample");
  const std::vector<double> a(d.size(), -1.0 / static_cast<double>(d.size()));
  return best_stump(cls, d.x, a, d.labels(), false).stump;
}

// ---- PHD -------------------------------------------------------------------

DiscrepancyReport paired_discrepancy(const Hypothesis& h1, const Hypothesis& h2, const Dataset& t,
                                     const LossSpec& loss, std::span<const std::size_t> exclude) {
  if (t.size() == 0) throw DegenerateInputError("PHD needs a non-empty target sample");
  std::vector<char> drop(t.size(), 0);
  for (auto i : exclude) {
    if (i >= t.size()) throw ContractError("excluded row index out of range");
    drop[i] = 1;
  }
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (!drop[i]) keep.push_back(i);
  if (keep.empty()) throw DegenerateInputError("every target row is excluded from PHD");
  const Matrix x = keep.size() == t.size() ? t.x : select_rows(t.x, keep);
  DiscrepancyReport r;
  r.measure = "phd";
  r.value = empirical_risk(h1, &h2, x, loss);
  r.method = Method::closed_form;
  r.details = {{"loss", loss.name()}, {"rows_used", std::to_string(keep.size())},
               {"rows_excluded", std::to_string(t.size() - keep.size())}};
  r.n_t = keep.size();
  return r;
}

// ---- exact suprema over stumps --------------------------------------------

namespace {

DiscrepancyReport exact_gap(const std::string& measure, const Dataset& s, const Dataset& t,
                            const StumpClass& cls, std::span<const int> ref_s,
                            std::span<const int> ref_t) {
  const Matrix pooled = vstack(s.x, t.x);
  std::vector<double> a(pooled.rows());
  std::vector<int> r(pooled.rows());
  for (std::size_t i = 0; i < s.size(); ++i) {
    a[i] = -1.0 / static_cast<double>(s.size());
    r[i] = ref_s[i];
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    a[s.size() + i] = 1.0 / static_cast<double>(t.size());
    r[s.size() + i] = ref_t[i];
  }
  const auto opt = best_stump(cls, pooled, a, r, true);
  // Recount at the witness so the value is the same rational as the pairwise sweep.
  const auto ps = StumpClass::predict(opt.stump, s.x);
  const auto pt = StumpClass::predict(opt.stump, t.x);
  std::size_t ms = 0, mt = 0;
  for (std::size_t i = 0; i < s.size(); ++i) ms += ps[i] != ref_s[i];
  for (std::size_t i = 0; i < t.size(); ++i) mt += pt[i] != ref_t[i];
  DiscrepancyReport rep;
  rep.measure = measure;
  rep.value = std::abs(static_cast<double>(mt) * (1.0 / static_cast<double>(t.size())) -
                       static_cast<double>(ms) * (1.0 / static_cast<double>(s.size())));
  rep.method = Method::exact_enumeration;
  rep.details = {{"witness", opt.stump.describe()},
                 {"direction", opt.value >= 0 ? "target-minus-source" : "source-minus-target"},
                 {"class_size", std::to_string(cls.size())}};
  rep.n_s = s.size();
  rep.n_t = t.size();
  return rep;
}

}  // namespace

DiscrepancyReport dh_exact(const Dataset& s, const Dataset& t, const StumpClass& cls) {
  require_same_dim(s, t);
  const std::vector<int> ones_s(s.size(), 1), ones_t(t.size(), 1);
  return exact_gap("d_h", s, t, cls, ones_s, ones_t);
}

DiscrepancyReport sdisc_exact(const Dataset& s, const Dataset& t, const Hypothesis& h_s,
                              const StumpClass& cls) {
  require_same_dim(s, t);
  return exact_gap("s_disc", s, t, cls, binary_reference(h_s, s.x), binary_reference(h_s, t.x));
}

DiscrepancyReport disc_exact(const Dataset& s, const Dataset& t, const StumpClass& cls,
                             std::size_t max_class) {
  require_same_dim(s, t);
  const std::size_t count = cls.size();
  if (count > max_class)
    throw CapacityError("stump class has " + std::to_string(count) +
                        " members, above the pairwise limit " + std::to_string(max_class) +
                        "; subsample the data");
  const std::size_t ws = (s.size() + 63) / 64;
  const std::size_t wt = (t.size() + 63) / 64;
  std::vector<std::uint64_t> bs(count * ws, 0), bt(count * wt, 0);
  for (std::size_t c = 0; c < count; ++c) {
    const Stump st = cls.at(c);
    const auto ps = StumpClass::predict(st, s.x);
    const auto pt = StumpClass::predict(st, t.x);
    for (std::size_t i = 0; i < ps.size(); ++i)
      if (ps[i]) bs[c * ws + i / 64] |= std::uint64_t{1} << (i % 64);
    for (std::size_t i = 0; i < pt.size(); ++i)
      if (pt[i]) bt[c * wt + i / 64] |= std::uint64_t{1} << (i % 64);
  }
  const auto gap = kernels::parallel::max_pair_gap(count, bs, ws, s.size(), bt, wt, t.size());
  DiscrepancyReport rep;
  rep.measure = "disc";
  rep.value = gap.value;
  rep.method = Method::exact_enumeration;
  rep.details = {{"witness_first", cls.at(gap.first).describe()},
                 {"witness_second", cls.at(gap.second).describe()},
                 {"class_size", std::to_string(count)}};
  rep.n_s = s.size();
  rep.n_t = t.size();
  return rep;
}

// ---- adversarial estimates ---------------------------------------------------

namespace {

double gap_statistic(const Hypothesis& h, const Matrix& xs, std::span<const int> rs,
                     const Matrix& xt, std::span<const int> rt) {
  return disagreement(h.predict(xt), rt) - disagreement(h.predict(xs), rs);
}

// Moves the output bias to the threshold on the discriminator's score that
// maximizes sign * (R_T(h, r_t) - R_S(h, r_s)) on the given rows. The result
// stays in the class; the trained bias is kept unless a threshold beats it.
void calibrate_output_bias(Hypothesis& h, const Matrix& xs, std::span<const int> rs,
                           const Matrix& xt, std::span<const int> rt, double sign) {
  const Matrix ss = h.scores(xs), st = h.scores(xt);
  struct Row {
    double score;
    double weight;  // change of the objective when this row flips from 1 to 0
  };
  std::vector<Row> rows;
  rows.reserve(xs.rows() + xt.rows());
  const double ws = sign / static_cast<double>(xs.rows());
  const double wt = sign / static_cast<double>(xt.rows());
  // Predicting 0 instead of 1 removes a disagreement when the reference is 0
  // and adds one when it is 1.
  for (std::size_t i = 0; i < xs.rows(); ++i) rows.push_back({ss(i, 0), rs[i] ? -ws : ws});
  for (std::size_t i = 0; i < xt.rows(); ++i) rows.push_back({st(i, 0), rt[i] ? wt : -wt});
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.score < b.score; });

  // Objective with every row predicted 1, then flip rows in score order.
  double all_one = 0.0;
  for (std::size_t i = 0; i < xs.rows(); ++i) all_one -= rs[i] ? 0.0 : ws;
  for (std::size_t i = 0; i < xt.rows(); ++i) all_one += rt[i] ? 0.0 : wt;
  const auto current = [&] {
    double v = all_one;
    for (const auto& r : rows)
      if (r.score < 0.0) v += r.weight;
    return v;
  }();
  double best = current, value = all_one;
  std::optional<double> threshold;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    value += rows[i].weight;
    if (i + 1 < rows.size() && rows[i + 1].score == rows[i].score) continue;
    if (value > best + 1e-12) {
      best = value;
      threshold = i + 1 < rows.size() ? 0.5 * (rows[i].score + rows[i + 1].score)
                                      : rows[i].score + 1.0;
    }
  }
  if (all_one > best + 1e-12) {
    best = all_one;
    threshold = rows.front().score - 1.0;
  }
  if (!threshold) return;
  const Architecture& a = h.arch();
  const std::size_t last = a.layers() - 1;
  h.params()[a.layer_offset(last) + a.fan_in(last)] -= *threshold;
}

DiscrepancyReport adversarial(const std::string& measure, const Dataset& s, const Dataset& t,
                              const std::vector<int>& ref_s, const std::vector<int>& ref_t,
                              const Architecture& arch, const AdversarialConfig& cfg) {
  if (arch.outputs != 1) throw ContractError("discriminator architecture must be binary");
  std::vector<std::size_t> fit_s(s.size()), fit_t(t.size());
  std::iota(fit_s.begin(), fit_s.end(), 0);
  std::iota(fit_t.begin(), fit_t.end(), 0);
  std::vector<std::size_t> eval_s = fit_s, eval_t = fit_t;
  if (cfg.held_out) {
    const Rng root(cfg.split_seed);
    auto hs = split_indices(s.size(), {{0.5, 0.5}, root.child(1).seed()});
    auto ht = split_indices(t.size(), {{0.5, 0.5}, root.child(2).seed()});
    fit_s = hs[0];
    eval_s = hs[1];
    fit_t = ht[0];
    eval_t = ht[1];
  }
  const Matrix xs_fit = select_rows(s.x, fit_s), xt_fit = select_rows(t.x, fit_t);
  const Matrix xs_eval = select_rows(s.x, eval_s), xt_eval = select_rows(t.x, eval_t);
  std::vector<int> rs_eval(eval_s.size()), rt_eval(eval_t.size());
  for (std::size_t i = 0; i < eval_s.size(); ++i) rs_eval[i] = ref_s[eval_s[i]];
  for (std::size_t i = 0; i < eval_t.size(); ++i) rt_eval[i] = ref_t[eval_t[i]];

  const Matrix pooled = vstack(xs_fit, xt_fit);
  // equal total weight per domain, mean weight 1
  const double total = static_cast<double>(pooled.rows());
  std::vector<double> w(pooled.rows());
  for (std::size_t i = 0; i < fit_s.size(); ++i) w[i] = 0.5 * total / fit_s.size();
  for (std::size_t i = 0; i < fit_t.size(); ++i) w[fit_s.size() + i] = 0.5 * total / fit_t.size();

  const Rng seeds(cfg.train.seed);
  DiscrepancyReport rep;
  rep.measure = measure;
  rep.method = Method::adversarial;
  double best = 0.0;
  std::string best_dir;
  for (int dir = 1; dir <= 2; ++dir) {
    // direction 1 agrees with the reference on S and disagrees on T
    std::vector<int> y(pooled.rows());
    for (std::size_t i = 0; i < fit_s.size(); ++i)
      y[i] = dir == 1 ? ref_s[fit_s[i]] : 1 - ref_s[fit_s[i]];
    for (std::size_t i = 0; i < fit_t.size(); ++i)
      y[fit_s.size() + i] = dir == 1 ? 1 - ref_t[fit_t[i]] : ref_t[fit_t[i]];
    const Dataset train = make_dataset(pooled, std::move(y), 2, "discriminator");
    TrainConfig tc = cfg.train;
    tc.seed = seeds.child(static_cast<std::uint64_t>(dir)).seed();
    FitOptions opt;
    opt.weights = w;
    Hypothesis h = fit(train, arch, tc, LossSpec::logistic(), opt);
    std::vector<int> rs_fit(fit_s.size()), rt_fit(fit_t.size());
    for (std::size_t i = 0; i < fit_s.size(); ++i) rs_fit[i] = ref_s[fit_s[i]];
    for (std::size_t i = 0; i < fit_t.size(); ++i) rt_fit[i] = ref_t[fit_t[i]];
    calibrate_output_bias(h, xs_fit, rs_fit, xt_fit, rt_fit, dir == 1 ? 1.0 : -1.0);
    const double stat = std::abs(gap_statistic(h, xs_eval, rs_eval, xt_eval, rt_eval));
    rep.details.emplace_back("direction_" + std::to_string(dir), fmt(stat));
    rep.seeds.push_back(tc.seed);
    if (stat > best || best_dir.empty()) {
      best = stat;
      best_dir = std::to_string(dir);
    }
  }
  rep.value = best;
  rep.details.emplace_back("best_direction", best_dir);
  rep.details.emplace_back("evaluation", cfg.held_out ? "held-out" : "in-sample");
  rep.details.emplace_back("architecture", arch.describe());
  if (cfg.held_out) rep.seeds.push_back(cfg.split_seed);
  rep.n_s = s.size();
  rep.n_t = t.size();
  return rep;
}

}  // namespace

DiscrepancyReport dh_adv(const Dataset& s, const Dataset& t, const Architecture& arch,
                         const AdversarialConfig& cfg) {
  require_same_dim(s, t);
  return adversarial("d_h", s, t, std::vector<int>(s.size(), 1), std::vector<int>(t.size(), 1),
                     arch, cfg);
}

DiscrepancyReport sdisc_adv(const Dataset& s, const Dataset& t, const Hypothesis& h_s,
                            const Architecture& arch, const AdversarialConfig& cfg) {
  require_same_dim(s, t);
  return adversarial("s_disc", s, t, binary_reference(h_s, s.x), binary_reference(h_s, t.x), arch,
                     cfg);
}

// ---- Wasserstein-1 -----------------------------------------------------------

std::vector<std::size_t> min_cost_assignment(const Matrix& cost) {
  const std::size_t n = cost.rows();
  if (cost.cols() != n) throw ContractError("assignment needs a square cost matrix");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // Shortest augmenting paths with potentials, 1-based with a dummy column 0.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assign(n);
  for (std::size_t j = 1; j <= n; ++j) assign[p[j] - 1] = j - 1;
  return assign;
}

namespace {

double w1_one_dim(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a.size() == b.size()) {
    KahanSum s;
    for (std::size_t i = 0; i < a.size(); ++i) s.add(std::abs(a[i] - b[i]));
    return s.value() / static_cast<double>(a.size());
  }
  // integral of |F_a - F_b| over the merged support
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double prev = std::min(a.front(), b.front());
  KahanSum s;
  while (i < a.size() || j < b.size()) {
    const double next = (j >= b.size() || (i < a.size() && a[i] <= b[j])) ? a[i] : b[j];
    s.add(std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb) * (next - prev));
    while (i < a.size() && a[i] == next) ++i;
    while (j < b.size() && b[j] == next) ++j;
    prev = next;
  }
  return s.value();
}

}  // namespace

DiscrepancyReport w1_exact(const Dataset& s, const Dataset& t, std::uint64_t seed,
                           std::size_t max_points) {
  require_same_dim(s, t);
  DiscrepancyReport rep;
  rep.measure = "w1";
  rep.n_s = s.size();
  rep.n_t = t.size();
  if (s.dim() == 1) {
    rep.method = Method::closed_form;
    rep.value = w1_one_dim({s.x.data().begin(), s.x.data().end()},
                           {t.x.data().begin(), t.x.data().end()});
    rep.details = {{"coupling", s.size() == t.size() ? "sorted" : "quantile"}};
    return rep;
  }
  const std::size_t n = std::min(s.size(), t.size());
  if (n > max_points)
    throw CapacityError("exact assignment is limited to " + std::to_string(max_points) +
                        " points per side, got " + std::to_string(n) +
                        "; subsample both samples first");
  Matrix xs = s.x, xt = t.x;
  if (s.size() != t.size()) {
    Rng rng(seed);
    auto perm = rng.permutation(std::max(s.size(), t.size()));
    perm.resize(n);
    std::sort(perm.begin(), perm.end());
    if (s.size() > n)
      xs = select_rows(s.x, perm);
    else
      xt = select_rows(t.x, perm);
    rep.seeds.push_back(seed);
  }
  const Matrix cost = kernels::parallel::euclidean_cost(xs, xt);
  const auto assign = min_cost_assignment(cost);
  KahanSum total;
  for (std::size_t i = 0; i < n; ++i) total.add(cost(i, assign[i]));
  rep.method = Method::assignment;
  rep.value = total.value() / static_cast<double>(n);
  rep.details = {{"points_per_side", std::to_string(n)},
                 {"resampled", s.size() != t.size() ? "true" : "false"}};
  return rep;
}

// ---- L1 histogram ------------------------------------------------------------

double l1_hist(const Dataset& s, const Dataset& t, std::size_t bins) {
  require_same_dim(s, t);
  if (bins < 1) throw ContractError("l1_hist needs bins >= 1");
  const std::size_t d = s.dim();
  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  for (const Matrix* m : {&s.x, &t.x})
    for (std::size_t i = 0; i < m->rows(); ++i)
      for (std::size_t f = 0; f < d; ++f) {
        lo[f] = std::min(lo[f], (*m)(i, f));
        hi[f] = std::max(hi[f], (*m)(i, f));
      }
  std::map<std::vector<std::uint32_t>, std::pair<double, double>> cells;
  std::vector<std::uint32_t> key(d);
  auto fill = [&](const Matrix& m, bool source) {
    const double mass = 1.0 / static_cast<double>(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t f = 0; f < d; ++f) {
        const double width = hi[f] - lo[f];
        std::size_t b = 0;
        if (width > 0.0)
          b = std::min(bins - 1, static_cast<std::size_t>((m(i, f) - lo[f]) / width *
                                                          static_cast<double>(bins)));
        key[f] = static_cast<std::uint32_t>(b);
      }
      auto& cell = cells[key];
      (source ? cell.first : cell.second) += mass;
    }
  };
  fill(s.x, true);
  fill(t.x, false);
  KahanSum total;
  for (const auto& [k, v] : cells) total.add(std::abs(v.first - v.second));
  return total.value();
}

}  // namespace phd
