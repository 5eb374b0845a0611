#include "phd/experiments.hpp"

#include <cmath>
#include <exception>

#include "phd/bounds.hpp"
#include "phd/discrepancy.hpp"
#include "phd/error.hpp"
#include "phd/semisup.hpp"
#include "phd/tritrain.hpp"

namespace phd {

namespace {

// Runs fn(i) for i in [0, count) in parallel and rethrows the first failure
// by index.
template <class Fn>
void for_each_trial(std::size_t count, Fn fn) {
  std::vector<std::exception_ptr> errors(count);
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

TrainConfig train_config(std::size_t epochs, double lr, std::uint64_t seed) {
  TrainConfig t;
  t.epochs = epochs;
  t.learning_rate = lr;
  t.seed = seed;
  return t;
}

double accuracy(const Hypothesis& h, const Dataset& d) {
  return 1.0 - empirical_risk(h, std::span<const int>(d.labels()), d, LossSpec::zero_one());
}

double stump_error(const Stump& s, const Dataset& d) {
  const auto p = StumpClass::predict(s, d.x);
  return disagreement(p, d.labels());
}

std::int64_t as_int(std::size_t v) { return static_cast<std::int64_t>(v); }
std::int64_t as_int(std::uint64_t v, int) { return static_cast<std::int64_t>(v); }

void require(bool ok, const char* what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

// ---- identical domains -------------------------------------------------------

void IdenticalConfig::validate() const {
  require(seeds >= 1, "seeds must be >= 1");
  require(n >= 10, "n must be >= 10");
  require(d >= 1, "d must be >= 1");
  require(width >= 1, "width must be >= 1");
  require(epochs >= 1, "epochs must be >= 1");
  require(learning_rate > 0.0, "learning rate must be > 0");
  require(ssl_fraction > 0.0 && ssl_fraction < 1.0, "ssl fraction must be in (0, 1)");
}

std::vector<IdenticalRun> identical_domain_runs(const IdenticalConfig& cfg) {
  cfg.validate();
  std::vector<IdenticalRun> runs(cfg.seeds);
  const Rng root(cfg.seed);
  for_each_trial(cfg.seeds, [&](std::size_t trial) {
    const Rng rng = root.child(trial);
    IdenticalRun& run = runs[trial];
    run.seed = rng.seed();

    PairSpec ps;
    ps.n = cfg.n;
    ps.d = cfg.d;
    ps.rule = LabelRule::linear;
    ps.nuisance_std = cfg.nuisance_std;
    ps.seed = rng.child(1).seed();
    const auto [s, t] = gen_gaussian_pair(ps);
    const Dataset t_star_train = draw_source(ps, rng.child(2).seed());
    const auto halves =
        split(t.without_labels(), {{cfg.ssl_fraction, 1.0 - cfg.ssl_fraction}, rng.child(3).seed()});
    const Dataset& t_fit = halves[0];
    const Dataset t_eval_labeled = t.subset(
        split_indices(t.size(), {{cfg.ssl_fraction, 1.0 - cfg.ssl_fraction}, rng.child(3).seed()})[1]);
    const Dataset& t_eval = halves[1];

    const StumpClass cls = StumpClass::from_samples(s.x, t.x);
    const Hypothesis stump_hs = StumpClass::hypothesis(stump_erm(cls, s), cfg.d);
    run.dh_exact = dh_exact(s, t, cls).value;
    run.sdisc_exact = sdisc_exact(s, t, stump_hs, cls).value;

    const Architecture lin = Architecture::linear(cfg.d);
    const TrainConfig lin_train = train_config(cfg.epochs, cfg.learning_rate, rng.child(4).seed());
    const Hypothesis lin_hs = train_erm(s, lin, lin_train, LossSpec::surrogate_for(lin));
    SelfTrainConfig lin_ssl;
    lin_ssl.base = lin_train;
    const auto lin_self = train_self(s, t_fit, lin, lin_ssl, rng.child(5).seed());
    run.phd_linear = paired_discrepancy(lin_hs, lin_self.h, t_eval, LossSpec::zero_one()).value;

    const Architecture mlp = Architecture::mlp(cfg.d, {cfg.width, cfg.width}, 2, true);
    const LossSpec surrogate = LossSpec::surrogate_for(mlp);
    const Hypothesis hs =
        train_erm(s, mlp, train_config(cfg.epochs, cfg.learning_rate, rng.child(6).seed()), surrogate);
    AdversarialConfig ac;
    ac.train = train_config(cfg.epochs, cfg.learning_rate, rng.child(7).seed());
    run.dh_adv = dh_adv(s, t, mlp, ac).value;
    ac.train.seed = rng.child(8).seed();
    const DiscrepancyReport sdisc = sdisc_adv(s, t, hs, mlp, ac);
    run.sdisc_adv = sdisc.value;
    SelfTrainConfig ssl;
    ssl.base = train_config(cfg.epochs, cfg.learning_rate, 0);
    const auto self = train_self(s, t_fit, mlp, ssl, rng.child(9).seed());
    run.phd_mlp = paired_discrepancy(hs, self.h, t_eval, LossSpec::zero_one()).value;
    run.source_accuracy = accuracy(hs, t);

    const Hypothesis t_star = train_erm(
        t_star_train, mlp, train_config(cfg.epochs, cfg.learning_rate, rng.child(10).seed()), surrogate);
    const TargetOracle oracle{&t_star, &t_eval_labeled};
    run.thm1 = bound_thm1(hs, hs, self.h, t_eval, LossSpec::zero_one(), oracle);
    run.ineq2 = bound_ineq2(hs, hs, s, t_eval, sdisc, oracle);
  });
  return runs;
}

Table table1(const std::vector<IdenticalRun>& runs) {
  Table t{"table1", {"seed", "class", "sup_estimator", "d_h", "s_disc", "phd"}, {}};
  for (const auto& r : runs) {
    t.add_row({as_int(r.seed, 0), std::string("linear"), std::string("exact-stump"), r.dh_exact,
               r.sdisc_exact, r.phd_linear});
    t.add_row({as_int(r.seed, 0), std::string("mlp"), std::string("adversarial"), r.dh_adv,
               r.sdisc_adv, r.phd_mlp});
  }
  return t;
}

Table table2(const std::vector<IdenticalRun>& runs) {
  Table t{"table2",
          {"seed", "source_accuracy", "phd", "s_disc", "risk_h2_vs_target_star",
           "risk_hs_vs_target_star", "phd_bound", "sdisc_bound"},
          {}};
  for (const auto& r : runs) {
    const BoundTerm* phd_diag = r.thm1.find("target_risk_h2_vs_target_star");
    const BoundTerm* s_diag = r.ineq2.find("target_risk_source_star_vs_target_star");
    t.add_row({as_int(r.seed, 0), r.source_accuracy, r.phd_mlp, r.sdisc_adv,
               phd_diag ? phd_diag->value : 0.0, s_diag ? s_diag->value : 0.0, r.thm1.total,
               r.ineq2.total});
  }
  return t;
}

// ---- unrelated domains -------------------------------------------------------

void UnrelatedConfig::validate() const {
  require(seeds >= 1, "seeds must be >= 1");
  require(n >= 10, "n must be >= 10");
  require(k >= 2, "k must be >= 2");
  require(informative >= 1 && informative < d, "informative dims must be in [1, d)");
  require(blob_radius > 0.0, "blob radius must be > 0");
  require(width >= 1 && epochs >= 1, "width and epochs must be >= 1");
  require(learning_rate > 0.0, "learning rate must be > 0");
}

namespace {

PairSpec blob_spec(const UnrelatedConfig& cfg, std::size_t n) {
  PairSpec ps;
  ps.n = n;
  ps.d = cfg.d;
  ps.rule = LabelRule::blobs;
  ps.k = cfg.k;
  ps.informative = cfg.informative;
  ps.nuisance_std = 0.0;
  ps.blob_radius = cfg.blob_radius;
  return ps;
}

}  // namespace

std::pair<Dataset, Dataset> unrelated_pair(const UnrelatedConfig& cfg, std::size_t n,
                                           std::uint64_t seed) {
  const Rng rng(seed);
  const PairSpec ps = blob_spec(cfg, n);
  Dataset s = draw_source(ps, rng.child(1).seed());
  PairSpec other = ps;
  other.d = cfg.d - cfg.informative;
  other.informative = other.d;
  other.layout_seed = rng.child(3).seed();
  const Dataset inner = draw_source(other, rng.child(2).seed());
  Matrix x(n, cfg.d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < other.d; ++f) x(i, cfg.informative + f) = inner.x(i, f);
  Dataset t = make_dataset(std::move(x), inner.y, cfg.k, "unrelated");
  return {std::move(s), std::move(t)};
}

Table table3(const UnrelatedConfig& cfg) {
  cfg.validate();
  Table table{"table3",
              {"seed", "target", "source_accuracy", "phd", "risk_ssl_vs_target_star",
               "risk_hs_vs_target_star"},
              {}};
  struct Row {
    double acc, phd, r_ssl, r_s;
  };
  std::vector<Row> rows(cfg.seeds * 2);
  const Rng root(cfg.seed);
  for_each_trial(cfg.seeds * 2, [&](std::size_t job) {
    const std::size_t trial = job / 2;
    const bool unrelated = job % 2 == 1;
    const Rng rng = root.child(trial);
    const auto [s, t_unrelated] = unrelated_pair(cfg, cfg.n, rng.child(1).seed());
    Dataset t, t_star_train;
    if (unrelated) {
      t = t_unrelated;
      t_star_train = unrelated_pair(cfg, cfg.n, rng.child(2).seed()).second;
    } else {
      const PairSpec ps = blob_spec(cfg, cfg.n);
      t = draw_source(ps, rng.child(3).seed());
      t_star_train = draw_source(ps, rng.child(4).seed());
    }
    const Architecture arch = Architecture::mlp(cfg.d, {cfg.width, cfg.width}, cfg.k, true);
    const LossSpec surrogate = LossSpec::surrogate_for(arch);
    const Hypothesis hs =
        train_erm(s, arch, train_config(cfg.epochs, cfg.learning_rate, rng.child(5).seed()), surrogate);
    const auto parts = split_indices(t.size(), {{0.5, 0.5}, rng.child(6).seed()});
    const Dataset t_fit = t.subset(parts[0]).without_labels();
    const Dataset t_eval = t.subset(parts[1]);
    SelfTrainConfig ssl;
    ssl.base = train_config(cfg.epochs, cfg.learning_rate, 0);
    const auto self = train_self(s, t_fit, arch, ssl, rng.child(7).seed());
    const Hypothesis t_star = train_erm(
        t_star_train, arch, train_config(cfg.epochs, cfg.learning_rate, rng.child(8).seed()), surrogate);
    Row& r = rows[job];
    r.acc = accuracy(hs, s);
    r.phd = paired_discrepancy(hs, self.h, t_eval.without_labels(), LossSpec::zero_one()).value;
    r.r_ssl = empirical_risk(self.h, &t_star, t_eval, LossSpec::zero_one());
    r.r_s = empirical_risk(hs, &t_star, t_eval, LossSpec::zero_one());
  });
  for (std::size_t job = 0; job < rows.size(); ++job) {
    const auto& r = rows[job];
    table.add_row({as_int(root.child(job / 2).seed(), 0),
                   std::string(job % 2 ? "unrelated" : "same"), r.acc, r.phd, r.r_ssl, r.r_s});
  }
  return table;
}

// ---- source selection --------------------------------------------------------

void SelectionExperimentConfig::validate() const {
  require(seeds >= 1, "seeds must be >= 1");
  require(!sigmas.empty(), "at least one noise level is required");
  for (double s : sigmas) require(s >= 0.0, "noise levels must be >= 0");
  require(sources >= 2, "at least 2 sources are required");
  require(top_k >= 1 && top_k <= sources, "top_k must be in [1, sources]");
  require(n_source >= 10 && n_target >= 10, "sample sizes must be >= 10");
  require(informative >= 1 && informative < d, "informative dims must be in [1, d)");
  require(style_max >= 0.0, "style offset must be >= 0");
  require(learning_rate > 0.0 && weight_decay >= 0.0, "invalid optimizer settings");
}

namespace {

PairSpec pool_spec(const SelectionExperimentConfig& cfg, std::size_t n) {
  PairSpec ps;
  ps.n = n;
  ps.d = cfg.d;
  ps.rule = LabelRule::blobs;
  ps.k = cfg.k;
  ps.informative = cfg.informative;
  ps.nuisance_std = 1.0;
  ps.blob_std = cfg.blob_std;
  ps.blob_radius = cfg.blob_radius;
  return ps;
}

}  // namespace

SourcePool make_source_pool(const SelectionExperimentConfig& cfg, double sigma,
                            std::uint64_t seed) {
  cfg.validate();
  const Rng rng(seed);
  SourcePool pool;
  pool.target = draw_source(pool_spec(cfg, cfg.n_target), rng.child(1).seed());
  pool.target.domain_tag = "target";
  const PairSpec ps = pool_spec(cfg, cfg.n_source);
  for (std::size_t j = 0; j < cfg.sources; ++j) {
    Dataset src = draw_source(ps, rng.child(10 + j).seed());
    Rng style = rng.child(1000 + j);
    const double length = style.uniform(0.0, cfg.style_max);
    std::vector<double> dir(cfg.d, 0.0);
    double norm = 0.0;
    for (std::size_t f = cfg.informative; f < cfg.d; ++f) {
      dir[f] = style.normal();
      norm += dir[f] * dir[f];
    }
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < src.size(); ++i)
      for (std::size_t f = cfg.informative; f < cfg.d; ++f) src.x(i, f) += length * dir[f] / norm;
    const bool clean = j % 2 == 0;
    if (!clean) src = add_feature_noise(src, sigma, rng.child(2000 + j).seed());
    src.domain_tag = (clean ? "clean-" : "noisy-") + std::to_string(j);
    pool.sources.push_back(std::move(src));
    pool.clean.push_back(clean);
  }
  return pool;
}

SelectionConfig selection_config(const SelectionExperimentConfig& cfg, SelectionMeasure m,
                                 std::uint64_t seed) {
  SelectionConfig sc;
  sc.measure = m;
  sc.top_k = cfg.top_k;
  sc.arch = Architecture::mlp(cfg.d, {cfg.width, cfg.width}, cfg.k, true);
  sc.train = train_config(cfg.epochs, cfg.learning_rate, 0);
  sc.train.weight_decay = cfg.weight_decay;
  sc.self_train.base = sc.train;
  sc.self_train.rounds = cfg.ssl_rounds;
  sc.seed = seed;
  return sc;
}

Fig2Result fig2(const SelectionExperimentConfig& cfg) {
  cfg.validate();
  const SelectionMeasure measures[] = {SelectionMeasure::phd, SelectionMeasure::w1};
  const std::size_t per_sigma = cfg.seeds * 2;
  std::vector<SelectionOutcome> outcomes(cfg.sigmas.size() * per_sigma);
  const Rng root(cfg.seed);
  for_each_trial(outcomes.size(), [&](std::size_t job) {
    const std::size_t si = job / per_sigma;
    const std::size_t trial = (job % per_sigma) / 2;
    const SelectionMeasure m = measures[job % 2];
    const Rng rng = root.child(trial);
    const SourcePool pool = make_source_pool(cfg, cfg.sigmas[si], rng.child(si).seed());
    outcomes[job] = select_sources(pool.sources, pool.clean, pool.target,
                                   selection_config(cfg, m, rng.child(100).seed()), cfg.sigmas[si]);
  });

  Fig2Result out;
  out.runs = Table{"fig2-runs", {"sigma", "measure", "seed", "score", "accuracy"}, {}};
  out.summary = Table{"fig2", {"sigma", "measure", "mean_score", "sd_score", "mean_accuracy"}, {}};
  for (std::size_t si = 0; si < cfg.sigmas.size(); ++si) {
    for (std::size_t mi = 0; mi < 2; ++mi) {
      KahanSum score, score_sq, acc;
      for (std::size_t trial = 0; trial < cfg.seeds; ++trial) {
        const auto& o = outcomes[si * per_sigma + trial * 2 + mi];
        const double a = o.target_accuracy.value_or(0.0);
        out.runs.add_row({cfg.sigmas[si], o.measure, as_int(o.seed, 0),
                          static_cast<std::int64_t>(o.score), a});
        score.add(static_cast<double>(o.score));
        score_sq.add(static_cast<double>(o.score * o.score));
        acc.add(a);
      }
      const double n = static_cast<double>(cfg.seeds);
      const double mean = score.value() / n;
      const double var = cfg.seeds > 1 ? (score_sq.value() - n * mean * mean) / (n - 1.0) : 0.0;
      out.summary.add_row({cfg.sigmas[si], to_string(measures[mi]), mean,
                           std::sqrt(std::max(0.0, var)), acc.value() / n});
    }
  }
  return out;
}

// ---- learned-pair convergence ------------------------------------------------

void ConvergenceConfig::validate() const {
  require(seeds >= 1, "seeds must be >= 1");
  require(!sizes.empty(), "at least one sample size is required");
  for (auto n : sizes) require(n >= 2, "sample sizes must be >= 2");
  require(star_factor >= 1, "star factor must be >= 1");
  require(d >= 2, "d must be >= 2");
}

namespace {

PairSpec rotated_spec(std::size_t n, std::size_t d, double rotate, std::uint64_t seed) {
  PairSpec ps;
  ps.n = n;
  ps.d = d;
  ps.rule = LabelRule::linear;
  ps.rotate = rotate;
  ps.seed = seed;
  return ps;
}

}  // namespace

Table thm2_convergence(const ConvergenceConfig& cfg) {
  cfg.validate();
  std::size_t largest = 0;
  for (auto n : cfg.sizes) largest = std::max(largest, n);
  struct Row {
    double hat, star, dev, bound;
  };
  std::vector<Row> rows(cfg.seeds * cfg.sizes.size());
  const Rng root(cfg.seed);
  for_each_trial(cfg.seeds, [&](std::size_t trial) {
    const Rng rng = root.child(trial);
    const auto [s_big, t_big] =
        gen_gaussian_pair(rotated_spec(cfg.star_factor * largest, cfg.d, cfg.rotate, rng.child(0).seed()));
    const Stump h1_star = stump_erm(StumpClass::from_sample(s_big.x), s_big);
    const Stump h2_star = stump_erm(StumpClass::from_sample(t_big.x), t_big);
    const double star =
        disagreement(StumpClass::predict(h1_star, t_big.x), StumpClass::predict(h2_star, t_big.x));
    const Hypothesis h1s = StumpClass::hypothesis(h1_star, cfg.d);
    const Hypothesis h2s = StumpClass::hypothesis(h2_star, cfg.d);
    for (std::size_t j = 0; j < cfg.sizes.size(); ++j) {
      const std::size_t n = cfg.sizes[j];
      const auto [s, t] = gen_gaussian_pair(rotated_spec(n, cfg.d, cfg.rotate, rng.child(1 + j).seed()));
      const Stump h1 = stump_erm(StumpClass::from_sample(s.x), s);
      const Stump h2 = stump_erm(StumpClass::from_sample(t.x), t);
      const double hat = disagreement(StumpClass::predict(h1, t.x), StumpClass::predict(h2, t.x));
      const RademacherEstimate rad = rademacher_stumps(t.x, 20, rng.child(100 + j).seed());
      const BoundReport b = bound_thm2_dev(StumpClass::hypothesis(h1, cfg.d),
                                           StumpClass::hypothesis(h2, cfg.d), h1s, h2s, t, rad);
      rows[trial * cfg.sizes.size() + j] = {hat, star, std::abs(hat - star), b.total};
    }
  });
  Table table{"thm2-convergence", {"seed", "n", "phd_hat", "phd_star", "deviation", "bound"}, {}};
  for (std::size_t trial = 0; trial < cfg.seeds; ++trial)
    for (std::size_t j = 0; j < cfg.sizes.size(); ++j) {
      const Row& r = rows[trial * cfg.sizes.size() + j];
      table.add_row({as_int(root.child(trial).seed(), 0), as_int(cfg.sizes[j]), r.hat, r.star,
                     r.dev, r.bound});
    }
  return table;
}

// ---- fixed-pair bound validity -------------------------------------------------

void ValidityConfig::validate() const {
  require(trials >= 1, "trials must be >= 1");
  require(n >= 20, "n must be >= 20");
  require(oracle_n >= 1, "oracle sample must be non-empty");
  require(d >= 2, "d must be >= 2");
  require(delta > 0.0 && delta < 1.0, "delta must be in (0, 1)");
  require(rademacher_draws >= 1, "rademacher draws must be >= 1");
}

Table thm4_validity(const ValidityConfig& cfg) {
  cfg.validate();
  struct Row {
    double lhs, rhs, rad;
  };
  std::vector<Row> rows(cfg.trials);
  const Rng root(cfg.seed);
  for_each_trial(cfg.trials, [&](std::size_t trial) {
    const Rng rng = root.child(trial);
    const auto [s, t] = gen_gaussian_pair(rotated_spec(cfg.n, cfg.d, cfg.rotate, rng.child(1).seed()));
    const auto oracle =
        gen_gaussian_pair(rotated_spec(cfg.oracle_n, cfg.d, cfg.rotate, rng.child(2).seed())).second;
    const Dataset t_small =
        gen_gaussian_pair(rotated_spec(cfg.n / 10, cfg.d, cfg.rotate, rng.child(3).seed())).second;

    const Stump h1 = stump_erm(StumpClass::from_sample(s.x), s);
    const Stump h2 = stump_erm(StumpClass::from_sample(t_small.x), t_small);
    // h fits the h2 pseudo-labels on the unlabeled target sample
    Dataset pseudo = t.without_labels();
    pseudo.y = StumpClass::predict(h2, t.x);
    const Stump h = stump_erm(StumpClass::from_sample(t.x), pseudo);

    const RademacherEstimate rad = rademacher_stumps(t.x, cfg.rademacher_draws, rng.child(4).seed());
    BoundReport b = bound_thm4(StumpClass::hypothesis(h, cfg.d), StumpClass::hypothesis(h1, cfg.d),
                               StumpClass::hypothesis(h2, cfg.d), t.without_labels(), rad, cfg.delta);
    b.add("target_risk_h2_vs_target_star", stump_error(h2, oracle), TermKind::diagnostic);
    rows[trial] = {stump_error(h, oracle), b.total, rad.value};
  });
  Table table{"thm4-validity", {"trial", "lhs", "rhs", "rademacher", "violated"}, {}};
  for (std::size_t i = 0; i < cfg.trials; ++i)
    table.add_row({as_int(i), rows[i].lhs, rows[i].rhs, rows[i].rad,
                   static_cast<std::int64_t>(rows[i].lhs > rows[i].rhs ? 1 : 0)});
  return table;
}

// ---- tri-training ------------------------------------------------------------

void TriTrainExperimentConfig::validate() const {
  require(seeds >= 1, "seeds must be >= 1");
  require(n >= 20, "n must be >= 20");
  require(d >= 2, "d must be >= 2");
  require(width >= 1 && source_epochs >= 1 && refine_epochs >= 1, "invalid training settings");
  require(rounds >= 1, "rounds must be >= 1");
  require(rademacher_draws >= 1, "rademacher draws must be >= 1");
}

Table tritrain_blobs(const TriTrainExperimentConfig& cfg) {
  cfg.validate();
  std::vector<TriTrainResult> results(cfg.seeds);
  std::vector<Dataset> targets(cfg.seeds);
  const Rng root(cfg.seed);
  for_each_trial(cfg.seeds, [&](std::size_t trial) {
    const Rng rng = root.child(trial);
    PairSpec ps;
    ps.n = cfg.n;
    ps.d = cfg.d;
    ps.rule = LabelRule::blobs;
    ps.k = 2;
    ps.informative = 2;
    ps.blob_radius = 2.0;
    ps.seed = rng.child(1).seed();
    auto [s, t] = gen_gaussian_pair(ps);
    TriTrainConfig tc;
    tc.arch = Architecture::mlp(cfg.d, {cfg.width, cfg.width}, 2, true);
    tc.source = train_config(cfg.source_epochs, 1e-3, 0);
    tc.refine = train_config(cfg.refine_epochs, 1e-3, 0);
    tc.rounds = cfg.rounds;
    tc.rademacher_draws = cfg.rademacher_draws;
    tc.seed = rng.child(2).seed();
    results[trial] = tritrain(s, t, tc);
    targets[trial] = std::move(t);
  });
  Table table{"tritrain",
              {"seed", "round", "coverage", "tpl_size", "tpl_phd", "bound_total",
               "tritrain_accuracy", "source_only_accuracy"},
              {}};
  for (std::size_t trial = 0; trial < cfg.seeds; ++trial) {
    const auto& r = results[trial];
    const Dataset held = targets[trial].subset(r.held_rows);
    const double base = accuracy(r.source_only, held);
    for (const auto& rec : r.rounds)
      table.add_row({as_int(root.child(trial).seed(), 0), as_int(rec.round), rec.coverage,
                     as_int(rec.tpl_size), rec.tpl_phd, rec.bound.total,
                     rec.target_accuracy.value_or(0.0), base});
  }
  return table;
}

}  // namespace phd
