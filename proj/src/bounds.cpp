#include "phd/bounds.hpp"

#include <cmath>

#include "phd/error.hpp"
#include "phd/kernels.hpp"

namespace phd {

std::string to_string(TermKind k) {
  switch (k) {
    case TermKind::feasible: return "feasible";
    case TermKind::diagnostic: return "diagnostic";
    case TermKind::complexity: return "complexity";
    case TermKind::confidence: return "confidence";
  }
  return "?";
}

void BoundReport::add(std::string name, double value, TermKind kind) {
  if (!std::isfinite(value) || value < 0.0)
    throw ContractError("bound term '" + name + "' must be finite and non-negative");
  terms.push_back({std::move(name), value, kind});
  total = 0.0;
  for (const auto& t : terms) total += t.value;
}

double BoundReport::sum(TermKind kind) const {
  double s = 0.0;
  for (const auto& t : terms)
    if (t.kind == kind) s += t.value;
  return s;
}

const BoundTerm* BoundReport::find(const std::string& name) const {
  for (const auto& t : terms)
    if (t.name == name) return &t;
  return nullptr;
}

// ---- Rademacher ------------------------------------------------------------

namespace {

RademacherEstimate summarize(const std::vector<double>& per_draw, std::string descriptor,
                             std::string method) {
  RademacherEstimate r;
  r.draws = per_draw.size();
  KahanSum s;
  for (double v : per_draw) s.add(v);
  r.value = s.value() / static_cast<double>(r.draws);
  if (r.draws > 1) {
    KahanSum sq;
    for (double v : per_draw) sq.add((v - r.value) * (v - r.value));
    r.std_error = std::sqrt(sq.value() / static_cast<double>(r.draws - 1) /
                            static_cast<double>(r.draws));
  }
  r.class_descriptor = std::move(descriptor);
  r.method = std::move(method);
  return r;
}

std::vector<int> draw_signs(std::size_t m, const Rng& root, std::size_t k) {
  Rng rng = root.child(k);
  std::vector<int> s(m);
  for (auto& v : s) v = rng.sign();
  return s;
}

void require_draws(std::size_t draws) {
  if (draws < 1) throw ContractError("Rademacher estimate needs at least one draw");
}

}  // namespace

RademacherEstimate rademacher_finite(const std::vector<std::vector<int>>& members,
                                     std::size_t draws, std::uint64_t seed) {
  require_draws(draws);
  if (members.empty()) throw ContractError("finite class is empty");
  const std::size_t m = members.front().size();
  if (m == 0) throw DegenerateInputError("Rademacher estimate on an empty sample");
  for (const auto& h : members) {
    if (h.size() != m) throw ContractError("class members disagree on sample size");
    for (int v : h)
      if (v != 1 && v != -1) throw ContractError("class members must take values in {-1, +1}");
  }
  const Rng root(seed);
  std::vector<double> per(draws);
  const auto total = static_cast<std::ptrdiff_t>(draws);
#pragma omp parallel for schedule(static) if (draws * members.size() * m > (1u << 15))
  for (std::ptrdiff_t k = 0; k < total; ++k) {
    const auto sigma = draw_signs(m, root, static_cast<std::size_t>(k));
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& h : members) {
      long acc = 0;
      for (std::size_t i = 0; i < m; ++i) acc += sigma[i] * h[i];
      best = std::max(best, static_cast<double>(acc) / static_cast<double>(m));
    }
    per[static_cast<std::size_t>(k)] = best;
  }
  return summarize(per, "finite(" + std::to_string(members.size()) + ")", "exact-finite");
}

RademacherEstimate rademacher_stumps(const Matrix& x, std::size_t draws, std::uint64_t seed) {
  require_draws(draws);
  const std::size_t m = x.rows();
  if (m == 0) throw DegenerateInputError("Rademacher estimate on an empty sample");
  const auto cls = StumpClass::from_sample(x);
  const auto cols = kernels::sort_columns(x);
  const Rng root(seed);
  std::vector<double> per(draws);
  const auto total = static_cast<std::ptrdiff_t>(draws);
#pragma omp parallel for schedule(static) if (draws * m * x.cols() > (1u << 15))
  for (std::ptrdiff_t k = 0; k < total; ++k) {
    const auto sigma = draw_signs(m, root, static_cast<std::size_t>(k));
    // Polarity + gives sum_{x>t} sigma - sum_{x<=t} sigma = U - sum sigma
    // with U = sum_{x>t} 2 sigma; polarity - is its negation.
    std::vector<double> u(m);
    double all = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      u[i] = 2.0 * sigma[i] / static_cast<double>(m);
      all += sigma[i] / static_cast<double>(m);
    }
    double best = std::abs(all);  // constants
    const auto ext = kernels::serial::suffix_extrema(cols, cls.thresholds(), u);
    for (const auto& e : ext) {
      if (!e.any) continue;
      best = std::max({best, std::abs(e.max_value - all), std::abs(e.min_value - all)});
    }
    per[static_cast<std::size_t>(k)] = best;
  }
  return summarize(per, "stumps(" + std::to_string(cls.size()) + ")", "exact-finite");
}

RademacherEstimate rademacher_fit(const Matrix& x, const Architecture& arch,
                                  const TrainConfig& cfg, std::size_t draws, std::uint64_t seed) {
  require_draws(draws);
  if (arch.outputs != 1) throw ContractError("fit-to-noise needs a binary architecture");
  const std::size_t m = x.rows();
  if (m == 0) throw DegenerateInputError("Rademacher estimate on an empty sample");
  const Rng root(seed);
  std::vector<double> per(draws);
  for (std::size_t k = 0; k < draws; ++k) {
    const auto sigma = draw_signs(m, root, k);
    std::vector<int> y(m);
    for (std::size_t i = 0; i < m; ++i) y[i] = sigma[i] > 0 ? 1 : 0;
    const Dataset noise = make_dataset(x, y, 2, "noise");
    TrainConfig tc = cfg;
    tc.seed = root.child(k + draws).seed();
    const Hypothesis h = train_erm(noise, arch, tc, LossSpec::logistic());
    const auto pred = h.predict(x);
    long acc = 0;
    for (std::size_t i = 0; i < m; ++i) acc += sigma[i] * (pred[i] ? 1 : -1);
    per[k] = std::abs(static_cast<double>(acc)) / static_cast<double>(m);
  }
  return summarize(per, arch.describe(), "fit-to-noise");
}

double hoeffding_term(double bound, std::size_t n, double delta, bool two_sided) {
  if (!(bound > 0.0)) throw ContractError("Hoeffding term needs M > 0");
  if (n < 1) throw ContractError("Hoeffding term needs n >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ContractError("delta must be in (0, 1)");
  const double numer = two_sided ? std::log(2.0 / delta) : std::log(1.0 / delta);
  return bound * std::sqrt(numer / (2.0 * static_cast<double>(n)));
}

// ---- bound expressions -------------------------------------------------------

namespace {

double risk01(const Hypothesis& h, const Hypothesis& ref, const Matrix& x) {
  return empirical_risk(h, &ref, x, LossSpec::zero_one());
}

void add_oracle(BoundReport& r, const std::string& name, const Hypothesis& h,
                const Dataset& fallback, const TargetOracle& oracle) {
  if (!oracle.target_star) return;
  const Dataset& where = oracle.sample ? *oracle.sample : fallback;
  r.add(name, risk01(h, *oracle.target_star, where.x), TermKind::diagnostic);
}

void require_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ContractError("delta must be in (0, 1)");
}

void require_rad(const RademacherEstimate& rad) {
  if (!(rad.value >= 0.0)) throw ContractError("Rademacher estimate must be >= 0");
}

}  // namespace

BoundReport bound_lemma1(double bound, std::size_t n, double delta, bool two_sided) {
  BoundReport r;
  r.id = "lemma1";
  r.delta = delta;
  r.n_t = n;
  r.add(two_sided ? "deviation_two_sided" : "deviation", hoeffding_term(bound, n, delta, two_sided),
        TermKind::confidence);
  return r;
}

BoundReport bound_ineq1(const Hypothesis& h, const Hypothesis& h_s, const Dataset& t,
                        const TargetOracle& oracle) {
  BoundReport r;
  r.id = "ineq1";
  r.n_t = t.size();
  r.add("target_risk_h_vs_source_star", risk01(h, h_s, t.x), TermKind::feasible);
  add_oracle(r, "target_risk_source_star_vs_target_star", h_s, t, oracle);
  return r;
}

namespace {

BoundReport source_side_bound(const std::string& id, const std::string& disc_name,
                              const Hypothesis& h, const Hypothesis& h_s, const Dataset& s,
                              const Dataset& t, const DiscrepancyReport& disc,
                              const TargetOracle& oracle) {
  BoundReport r;
  r.id = id;
  r.n_t = t.size();
  r.add("source_risk_h_vs_source_star", risk01(h, h_s, s.x), TermKind::feasible);
  add_oracle(r, "target_risk_source_star_vs_target_star", h_s, t, oracle);
  r.add(disc_name, disc.value, TermKind::feasible);
  return r;
}

}  // namespace

BoundReport bound_ineq2(const Hypothesis& h, const Hypothesis& h_s, const Dataset& s,
                        const Dataset& t, const DiscrepancyReport& sdisc,
                        const TargetOracle& oracle) {
  return source_side_bound("ineq2-sdisc", "s_disc", h, h_s, s, t, sdisc, oracle);
}

BoundReport bound_ineq3(const Hypothesis& h, const Hypothesis& h_s, const Dataset& s,
                        const Dataset& t, const DiscrepancyReport& disc,
                        const TargetOracle& oracle) {
  return source_side_bound("ineq3-disc", "disc", h, h_s, s, t, disc, oracle);
}

BoundReport bound_thm1(const Hypothesis& h, const Hypothesis& h1, const Hypothesis& h2,
                       const Dataset& t, const LossSpec& loss, const TargetOracle& oracle) {
  if (!loss.triangle)
    throw ContractError("the PHD bound needs a loss obeying the triangle inequality, got " +
                        loss.name());
  BoundReport r;
  r.id = "thm1-phd";
  r.n_t = t.size();
  r.add("target_risk_h_vs_h1", empirical_risk(h, &h1, t.x, loss), TermKind::feasible);
  r.add("phd_h1_h2", empirical_risk(h1, &h2, t.x, loss), TermKind::feasible);
  add_oracle(r, "target_risk_h2_vs_target_star", h2, t, oracle);
  return r;
}

BoundReport bound_thm2_dev(const Hypothesis& h1_hat, const Hypothesis& h2_hat,
                           const Hypothesis& h1_star, const Hypothesis& h2_star, const Dataset& t,
                           const RademacherEstimate& rad, double delta) {
  require_delta(delta);
  require_rad(rad);
  BoundReport r;
  r.id = "thm2-dev";
  r.delta = delta;
  r.n_t = t.size();
  r.add("rademacher_x3", 3.0 * rad.value, TermKind::complexity);
  r.add("confidence", 3.0 * hoeffding_term(1.0, t.size(), delta / 12.0), TermKind::confidence);
  r.add("target_risk_h1hat_vs_h1star", risk01(h1_hat, h1_star, t.x), TermKind::diagnostic);
  r.add("target_risk_h2hat_vs_h2star", risk01(h2_hat, h2_star, t.x), TermKind::diagnostic);
  return r;
}

BoundReport bound_thm3(const Hypothesis& h, const LearnedPair& pair, const Dataset& t,
                       const RademacherEstimate& rad_h, const RademacherEstimate& rad_h_prime,
                       double delta, const TargetOracle& oracle) {
  require_delta(delta);
  require_rad(rad_h);
  require_rad(rad_h_prime);
  if (!pair.h1_hat || !pair.h2_hat || !pair.h1_star || !pair.h2_star)
    throw ContractError("the learned-pair bound needs all four hypotheses");
  BoundReport r;
  r.id = "thm3";
  r.delta = delta;
  r.n_t = t.size();
  r.add("target_risk_h_vs_h1star", risk01(h, *pair.h1_star, t.x), TermKind::diagnostic);
  r.add("phd_h1hat_h2hat", risk01(*pair.h1_hat, *pair.h2_hat, t.x), TermKind::feasible);
  add_oracle(r, "target_risk_h2star_vs_target_star", *pair.h2_star, t, oracle);
  r.add("rademacher_h_prime", rad_h_prime.value, TermKind::complexity);
  r.add("rademacher_h_x3", 3.0 * rad_h.value, TermKind::complexity);
  r.add("confidence", 4.0 * hoeffding_term(1.0, t.size(), delta / 7.0), TermKind::confidence);
  r.add("target_risk_h1hat_vs_h1star", risk01(*pair.h1_hat, *pair.h1_star, t.x),
        TermKind::diagnostic);
  r.add("target_risk_h2hat_vs_h2star", risk01(*pair.h2_hat, *pair.h2_star, t.x),
        TermKind::diagnostic);
  return r;
}

BoundReport bound_thm4(const Hypothesis& h, const Hypothesis& h1, const Hypothesis& h2,
                       const Dataset& t, const RademacherEstimate& rad, double delta,
                       const TargetOracle& oracle) {
  require_delta(delta);
  require_rad(rad);
  BoundReport r;
  r.id = "thm4";
  r.delta = delta;
  r.n_t = t.size();
  r.add("target_risk_h_vs_h1", risk01(h, h1, t.x), TermKind::feasible);
  r.add("phd_h1_h2", risk01(h1, h2, t.x), TermKind::feasible);
  add_oracle(r, "target_risk_h2_vs_target_star", h2, t, oracle);
  r.add("rademacher_x2", 2.0 * rad.value, TermKind::complexity);
  r.add("confidence", 2.0 * hoeffding_term(1.0, t.size(), delta / 2.0), TermKind::confidence);
  return r;
}

BoundReport bound_thm6_margin(const Hypothesis& h, const Hypothesis& h1, const Hypothesis& h2,
                              const Dataset& t, double rho, int k,
                              const RademacherEstimate& rad_pi1, double delta,
                              const TargetOracle& oracle) {
  if (!(rho > 0.0)) throw ContractError("margin bound needs rho > 0");
  if (k < 2) throw ContractError("margin bound needs k >= 2");
  require_delta(delta);
  require_rad(rad_pi1);
  BoundReport r;
  r.id = "thm6-margin";
  r.delta = delta;
  r.n_t = t.size();
  const auto reference = h1.predict(t.x);
  r.add("target_margin_risk_h_vs_h1", margin_risk(h.scores(t.x), reference, rho),
        TermKind::feasible);
  r.add("phd_h1_h2", risk01(h1, h2, t.x), TermKind::feasible);
  add_oracle(r, "target_risk_h2_vs_target_star", h2, t, oracle);
  r.add("rademacher_pi1_scaled", 4.0 * k / rho * rad_pi1.value, TermKind::complexity);
  r.add("confidence", 2.0 * hoeffding_term(1.0, t.size(), delta / 2.0), TermKind::confidence);
  return r;
}

}  // namespace phd
