#include "phd/tritrain.hpp"

#include <cmath>
#include <sstream>

#include "phd/error.hpp"

namespace phd {

AgreementSet build_tpl(const Hypothesis& h1, const Hypothesis& h2, const Dataset& t) {
  if (t.size() == 0) throw DegenerateInputError("agreement set needs a non-empty target");
  const auto p1 = h1.predict(t.x);
  const auto p2 = h2.predict(t.x);
  AgreementSet a;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (p1[i] != p2[i]) continue;
    a.indices.push_back(i);
    a.labels.push_back(p1[i]);
  }
  a.coverage = static_cast<double>(a.indices.size()) / static_cast<double>(t.size());
  return a;
}

void TriTrainConfig::validate() const {
  arch.validate();
  source.validate();
  refine.validate();
  if (rounds < 1) throw ConfigError("tri-training needs rounds >= 1");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
    throw ConfigError("holdout fraction must be in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must be in (0, 1)");
  if (!rademacher && rademacher_draws < 1) throw ConfigError("rademacher draws must be >= 1");
}

namespace {

Dataset bootstrap(const Dataset& s, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> idx(s.size());
  for (auto& i : idx) i = rng.below(s.size());
  return s.subset(idx);
}

Dataset with_labels(const Dataset& t, const AgreementSet& a) {
  Dataset d = t.subset(a.indices);
  d.y = a.labels;
  return d;
}

TrainConfig seeded(TrainConfig c, std::uint64_t seed) {
  c.seed = seed;
  return c;
}

struct Prepared {
  Dataset pl;
  Dataset held;
  std::vector<std::size_t> pl_rows, held_rows;
};

Prepared prepare(const Dataset& t, const TriTrainConfig& cfg) {
  auto parts = split_indices(
      t.size(), {{1.0 - cfg.holdout_fraction, cfg.holdout_fraction}, Rng(cfg.seed).child(1).seed()});
  Prepared p{t.subset(parts[0]), t.subset(parts[1]), parts[0], parts[1]};
  return p;
}

TriTrainResult run(const Prepared& prep, Hypothesis h1, Hypothesis h2,
                   const Dataset& s1, const Dataset& s2, Hypothesis source_only,
                   const TriTrainConfig& cfg) {
  const Rng root(cfg.seed);
  const LossSpec surrogate = LossSpec::surrogate_for(cfg.arch);
  // Multiclass architectures are measured through their binary counterpart.
  Architecture rad_arch = cfg.arch;
  rad_arch.outputs = 1;
  const RademacherEstimate rad =
      cfg.rademacher ? *cfg.rademacher
                     : rademacher_fit(prep.held.x, rad_arch, cfg.source, cfg.rademacher_draws,
                                      root.child(2).seed());
  TargetOracle oracle{cfg.target_star, nullptr};

  TriTrainResult out;
  out.source_only = source_only;
  out.pl_rows = prep.pl_rows;
  out.held_rows = prep.held_rows;
  Hypothesis h = std::move(source_only);

  for (std::size_t round = 1; round <= cfg.rounds; ++round) {
    RoundRecord rec;
    rec.round = round;
    const AgreementSet tpl = build_tpl(h1, h2, prep.pl);
    rec.coverage = tpl.coverage;
    rec.tpl_size = tpl.indices.size();
    if (tpl.indices.empty()) {
      rec.skipped = true;
    } else {
      const Dataset labeled = with_labels(prep.pl, tpl);
      rec.tpl_phd = empirical_risk(h1, &h2, labeled, LossSpec::zero_one());
      if (rec.tpl_phd != 0.0)
        throw ContractError("agreement set has non-zero PHD; the filter is broken");

      // h on the agreement set, keeping the best epoch by disagreement with h1
      Hypothesis best = h;
      double best_risk = empirical_risk(h, &h1, labeled, LossSpec::zero_one());
      rec.tpl_risk.push_back(best_risk);
      FitOptions opt;
      opt.warm_start = &h;
      opt.on_epoch = [&](std::size_t, const Hypothesis& cur) {
        const double r = empirical_risk(cur, &h1, labeled, LossSpec::zero_one());
        if (r < best_risk) {
          best_risk = r;
          best = cur;
        }
        rec.tpl_risk.push_back(best_risk);
      };
      fit(labeled, cfg.arch, seeded(cfg.refine, root.child(100 + 3 * round).seed()), surrogate,
          opt);
      h = best;

      FitOptions warm1, warm2;
      warm1.warm_start = &h1;
      warm2.warm_start = &h2;
      Hypothesis n1 = fit(concat(s1, labeled), cfg.arch,
                          seeded(cfg.refine, root.child(101 + 3 * round).seed()), surrogate, warm1);
      Hypothesis n2 = fit(concat(s2, labeled), cfg.arch,
                          seeded(cfg.refine, root.child(102 + 3 * round).seed()), surrogate, warm2);
      h1 = std::move(n1);
      h2 = std::move(n2);
    }
    rec.bound = bound_thm4(h, h1, h2, prep.held, rad, cfg.delta, oracle);
    if (prep.held.labeled())
      rec.target_accuracy =
          1.0 - empirical_risk(h, std::span<const int>(prep.held.labels()), prep.held,
                               LossSpec::zero_one());
    if (cfg.on_round) cfg.on_round(rec);
    out.rounds.push_back(std::move(rec));
  }
  out.h = std::move(h);
  out.h1 = std::move(h1);
  out.h2 = std::move(h2);
  return out;
}

}  // namespace

TriTrainResult tritrain(const Dataset& s, const Dataset& t, const TriTrainConfig& cfg) {
  cfg.validate();
  if (!s.labeled()) throw ContractError("tri-training needs a labeled source");
  if (s.dim() != t.dim()) throw ContractError("source and target feature dimensions differ");
  const Rng root(cfg.seed);
  const LossSpec surrogate = LossSpec::surrogate_for(cfg.arch);
  const Prepared prep = prepare(t, cfg);
  const Dataset s1 = bootstrap(s, root.child(11).seed());
  const Dataset s2 = bootstrap(s, root.child(12).seed());
  Hypothesis h1 = train_erm(s1, cfg.arch, seeded(cfg.source, root.child(21).seed()), surrogate);
  Hypothesis h2 = train_erm(s2, cfg.arch, seeded(cfg.source, root.child(22).seed()), surrogate);
  Hypothesis h0 = train_erm(s, cfg.arch, seeded(cfg.source, root.child(20).seed()), surrogate);
  return run(prep, std::move(h1), std::move(h2), s1, s2, std::move(h0), cfg);
}

TriTrainResult tritrain(const Dataset& s, const Dataset& t, const Hypothesis& h1,
                        const Hypothesis& h2, const TriTrainConfig& cfg) {
  cfg.validate();
  if (!s.labeled()) throw ContractError("tri-training needs a labeled source");
  if (s.dim() != t.dim()) throw ContractError("source and target feature dimensions differ");
  if (!(h1.arch() == cfg.arch) || !(h2.arch() == cfg.arch))
    throw ContractError("supplied hypotheses must use the configured architecture");
  const Rng root(cfg.seed);
  const Prepared prep = prepare(t, cfg);
  Hypothesis h0 = train_erm(s, cfg.arch, seeded(cfg.source, root.child(20).seed()),
                            LossSpec::surrogate_for(cfg.arch));
  return run(prep, h1, h2, s, s, std::move(h0), cfg);
}

std::string trace_csv(const TriTrainResult& r) {
  std::ostringstream out;
  out.precision(17);
  out << "round,skipped,coverage,tpl_size,tpl_phd";
  if (!r.rounds.empty())
    for (const auto& term : r.rounds.front().bound.terms) out << ',' << term.name;
  out << ",total,target_accuracy\n";
  for (const auto& rec : r.rounds) {
    out << rec.round << ',' << (rec.skipped ? 1 : 0) << ',' << rec.coverage << ',' << rec.tpl_size
        << ',' << rec.tpl_phd;
    for (const auto& term : rec.bound.terms) out << ',' << term.value;
    out << ',' << rec.bound.total << ',';
    if (rec.target_accuracy) out << *rec.target_accuracy;
    out << '\n';
  }
  return out.str();
}

}  // namespace phd
