#include "phd/adapt.hpp"

#include <algorithm>
#include <numeric>

#include "phd/discrepancy.hpp"
#include "phd/error.hpp"

namespace phd {

Dataset coral(const Dataset& s, const Dataset& t, double ridge) {
  if (s.size() == 0 || t.size() == 0) throw DegenerateInputError("CORAL needs non-empty samples");
  if (s.dim() != t.dim()) throw ContractError("CORAL: source and target dimensions differ");
  const Matrix whiten = sym_inv_sqrt(covariance(s.x), ridge);
  const Matrix recolor = sym_sqrt(covariance(t.x), ridge);
  const Matrix transform = matmul(whiten, recolor);
  const auto mu_s = column_means(s.x);
  const auto mu_t = column_means(t.x);
  Matrix centered = s.x;
  for (std::size_t i = 0; i < centered.rows(); ++i) {
    auto r = centered.row(i);
    for (std::size_t f = 0; f < r.size(); ++f) r[f] -= mu_s[f];
  }
  Matrix out = matmul(centered, transform);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t f = 0; f < r.size(); ++f) r[f] += mu_t[f];
  }
  Dataset d = s;
  d.x = std::move(out);
  return d;
}

SelectionMeasure parse_selection_measure(const std::string& name) {
  if (name == "phd") return SelectionMeasure::phd;
  if (name == "w1") return SelectionMeasure::w1;
  throw ConfigError("unknown selection measure '" + name + "' (expected phd|w1)");
}

std::string to_string(SelectionMeasure m) { return m == SelectionMeasure::phd ? "phd" : "w1"; }

void SelectionConfig::validate() const {
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
  arch.validate();
  train.validate();
  self_train.validate();
  if (!(phd_holdout > 0.0 && phd_holdout < 1.0)) throw ConfigError("phd holdout must be in (0, 1)");
  if (!(ridge > 0.0)) throw ConfigError("CORAL ridge must be > 0");
}

std::vector<std::size_t> rank_ascending(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  return order;
}

SelectionOutcome select_sources(const std::vector<Dataset>& sources,
                                const std::vector<bool>& clean, const Dataset& t,
                                const SelectionConfig& cfg, double sigma) {
  cfg.validate();
  if (sources.size() < 2) throw ConfigError("source selection needs at least 2 sources");
  if (cfg.top_k > sources.size())
    throw ConfigError("top_k " + std::to_string(cfg.top_k) + " exceeds the " +
                      std::to_string(sources.size()) + " sources");
  if (clean.size() != sources.size()) throw ContractError("one clean flag per source required");
  for (const auto& s : sources) {
    if (!s.labeled()) throw ContractError("every source must be labeled");
    if (s.dim() != t.dim()) throw ContractError("source and target dimensions differ");
  }
  const Rng root(cfg.seed);
  const Dataset target = t.without_labels();
  const LossSpec surrogate = LossSpec::surrogate_for(cfg.arch);

  std::vector<double> values(sources.size());
  if (cfg.measure == SelectionMeasure::phd) {
    auto parts = split_indices(target.size(), {{1.0 - cfg.phd_holdout, cfg.phd_holdout},
                                               root.child(1).seed()});
    const Dataset t_fit = target.subset(parts[0]);
    const Dataset t_eval = target.subset(parts[1]);
    const auto count = static_cast<std::ptrdiff_t>(sources.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t j = 0; j < count; ++j) {
      const auto idx = static_cast<std::size_t>(j);
      const Rng src = root.child(100 + idx);
      TrainConfig tc = cfg.train;
      tc.seed = src.child(1).seed();
      const Hypothesis h_s = train_erm(sources[idx], cfg.arch, tc, surrogate);
      const auto ssl = train_self(sources[idx], t_fit, cfg.arch, cfg.self_train, src.child(2).seed());
      values[idx] = paired_discrepancy(h_s, ssl.h, t_eval, LossSpec::zero_one()).value;
    }
  } else {
    for (std::size_t j = 0; j < sources.size(); ++j)
      values[j] = w1_exact(sources[j], target, root.child(100 + j).seed(), cfg.w1_points).value;
  }

  SelectionOutcome out;
  out.measure = to_string(cfg.measure);
  out.sigma = sigma;
  out.seed = cfg.seed;
  for (auto idx : rank_ascending(values)) out.ranking.push_back({idx, values[idx], clean[idx]});
  for (std::size_t j = 0; j < cfg.top_k; ++j) {
    out.chosen.push_back(out.ranking[j].index);
    out.score += out.ranking[j].clean ? 1 : 0;
  }

  Dataset pooled;
  for (auto idx : out.chosen) {
    Dataset aligned = coral(sources[idx], target, cfg.ridge);
    pooled = pooled.size() == 0 ? std::move(aligned) : concat(pooled, aligned);
  }
  TrainConfig tc = cfg.train;
  tc.seed = root.child(2).seed();
  const Hypothesis h = train_erm(pooled, cfg.arch, tc, surrogate);
  if (t.labeled())
    out.target_accuracy =
        1.0 - empirical_risk(h, std::span<const int>(t.labels()), t, LossSpec::zero_one());
  return out;
}

}  // namespace phd
