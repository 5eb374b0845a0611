#include "phd/semisup.hpp"

#include <algorithm>
#include <numeric>

#include "phd/error.hpp"

namespace phd {

void SelfTrainConfig::validate() const {
  if (!(tau > 0.5 && tau < 1.0)) throw ConfigError("self-training tau must be in (0.5, 1)");
  if (rounds < 1) throw ConfigError("self-training needs rounds >= 1");
  if (!(pseudo_weight > 0.0)) throw ConfigError("pseudo-label weight must be > 0");
  base.validate();
}

SelfTrainResult train_self(const Dataset& s, const Dataset& t, const Architecture& arch,
                           const SelfTrainConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (!s.labeled()) throw ContractError("self-training needs a labeled source");
  if (t.size() > 0 && t.dim() != s.dim())
    throw ContractError("source and target feature dimensions differ");
  TrainConfig tc = cfg.base;
  tc.seed = seed;
  const LossSpec surrogate = LossSpec::surrogate_for(arch);

  SelfTrainResult out;
  out.h = train_erm(s, arch, tc, surrogate);
  if (t.size() == 0) return out;

  std::vector<int> pseudo(t.size(), -1);
  std::vector<std::size_t> taken;
  for (std::size_t round = 0; round < cfg.rounds; ++round) {
    const auto conf = out.h.confidence(t.x);
    const auto pred = out.h.predict(t.x);
    std::vector<std::size_t> fresh;
    for (std::size_t i = 0; i < t.size(); ++i)
      if (pseudo[i] < 0 && conf[i] >= cfg.tau) fresh.push_back(i);
    if (cfg.cap > 0 && fresh.size() > cfg.cap) {
      std::stable_sort(fresh.begin(), fresh.end(),
                       [&](std::size_t a, std::size_t b) { return conf[a] > conf[b]; });
      fresh.resize(cfg.cap);
      std::sort(fresh.begin(), fresh.end());
    }
    if (fresh.empty()) break;
    for (auto i : fresh) pseudo[i] = pred[i];
    taken.insert(taken.end(), fresh.begin(), fresh.end());
    std::sort(taken.begin(), taken.end());
    out.added_per_round.push_back(fresh.size());
    out.rounds_run = round + 1;

    Dataset pl = t.subset(taken);
    std::vector<int> labels(taken.size());
    for (std::size_t j = 0; j < taken.size(); ++j) labels[j] = pseudo[taken[j]];
    pl.y = std::move(labels);
    pl.k = s.k;
    const Dataset pooled = concat(s, pl);
    std::vector<double> weights(pooled.size(), 1.0);
    std::fill(weights.begin() + static_cast<std::ptrdiff_t>(s.size()), weights.end(),
              cfg.pseudo_weight);
    FitOptions opt;
    opt.weights = weights;
    out.h = fit(pooled, arch, tc, surrogate, opt);
  }
  out.consumed = taken;
  return out;
}

}  // namespace phd
