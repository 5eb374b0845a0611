#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "generators.hpp"
#include "phd/error.hpp"
#include "phd/models.hpp"

using namespace phd;

namespace {

// Layer-by-layer forward pass written out independently of the library.
std::vector<double> forward_oracle(const Hypothesis& h, std::span<const double> x) {
  const Architecture& a = h.arch();
  const auto p = h.params();
  const auto st = h.stats();
  std::vector<double> act(x.begin(), x.end());
  std::size_t stat_at = 0;
  for (std::size_t l = 0; l < a.layers(); ++l) {
    const std::size_t in = a.fan_in(l), out = a.fan_out(l), off = a.layer_offset(l);
    std::vector<double> z(out, 0.0);
    for (std::size_t j = 0; j < out; ++j)
      for (std::size_t i = 0; i < in; ++i) z[j] += act[i] * p[off + i * out + j];
    const std::size_t tail = off + in * out;
    if (a.normalized(l)) {
      for (std::size_t j = 0; j < out; ++j) {
        const double mean = st[stat_at + j], var = st[stat_at + out + j];
        z[j] = (z[j] - mean) / std::sqrt(var + 1e-5) * p[tail + j] + p[tail + out + j];
      }
      stat_at += 2 * out;
    } else {
      for (std::size_t j = 0; j < out; ++j) z[j] += p[tail + j];
    }
    if (l + 1 < a.layers())
      for (double& v : z) v = v > 0 ? v : a.slope * v;
    act = std::move(z);
  }
  return act;
}

Dataset blobs_2d(std::size_t n, std::uint64_t seed, bool xor_layout) {
  Rng rng(seed);
  Matrix x(n, 2);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int a = (i % 4) < 2 ? 1 : -1, b = (i % 2) ? 1 : -1;
    x(i, 0) = 1.5 * a + 0.3 * rng.normal();
    x(i, 1) = 1.5 * b + 0.3 * rng.normal();
    y[i] = xor_layout ? ((a > 0) != (b > 0) ? 1 : 0) : (a > 0 ? 1 : 0);
  }
  return make_dataset(std::move(x), std::move(y), 2, "blobs");
}

double zero_one(const Hypothesis& h, const Dataset& d) {
  return empirical_risk(h, Labeler(std::span<const int>(d.labels())), d, LossSpec::zero_one());
}

}  // namespace

TEST_CASE("zero weights with bias +1 predict class 1 everywhere") {
  const Hypothesis h = Hypothesis::linear({0.0, 0.0, 0.0}, 1.0);
  Rng rng(1);
  for (int v : h.predict(phd::testing::gen_matrix(rng, 10, 3))) CHECK(v == 1);
}

TEST_CASE("binary score of exactly zero predicts class 1") {
  const Hypothesis h = Hypothesis::linear({0.0}, 0.0);
  CHECK(h.predict(Matrix(3, 1))[0] == 1);
}

TEST_CASE("argmax of [2.0, 0.5, 0.1] is class 0") {
  const Matrix s(1, 3, std::vector<double>{2.0, 0.5, 0.1});
  CHECK(predictions_from_scores(s) == std::vector<int>{0});
  const Matrix tie(1, 3, std::vector<double>{1.0, 3.0, 3.0});
  CHECK(predictions_from_scores(tie) == std::vector<int>{1});
}

TEST_CASE("MLP forward pass matches the unrolled oracle") {
  for (bool bn : {true, false}) {
    const auto arch = Architecture::mlp(5, {7, 4}, 3, bn);
    Rng rng(bn ? 31 : 32);
    std::vector<double> p(arch.param_count()), st(arch.stat_count());
    for (auto& v : p) v = rng.normal();
    for (std::size_t i = 0; i < st.size(); ++i) st[i] = rng.uniform(0.2, 2.0);
    const Hypothesis h(arch, p, st);
    const Matrix x = phd::testing::gen_matrix(rng, 6, 5);
    const Matrix s = h.scores(x);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const auto want = forward_oracle(h, x.row(r));
      for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(s(r, j) - want[j]) < 1e-12);
    }
  }
}

TEST_CASE("feature dimension mismatch is a contract error") {
  const Hypothesis h = Hypothesis::linear({1.0, 2.0}, 0.0);
  CHECK_THROWS_AS(h.scores(Matrix(2, 3)), ContractError);
}

TEST_CASE("zero-one risk: self is zero, fixed predictions give one half") {
  const Hypothesis h = Hypothesis::linear({1.0}, 0.0);
  Rng rng(2);
  const Dataset d = phd::testing::gen_dataset(rng, 20, 1);
  CHECK(empirical_risk(h, Labeler(&h), d, LossSpec::zero_one()) == 0.0);
  const std::vector<int> a{1, 1, 0, 0}, b{1, 0, 0, 1};
  CHECK(disagreement(a, b) == 0.5);
}

TEST_CASE("margin loss on [2.0, 0.5, 0.1] with reference 0") {
  const Matrix s(1, 3, std::vector<double>{2.0, 0.5, 0.1});
  const std::vector<int> ref{0};
  CHECK(margin_risk(s, ref, 1.0) == 0.0);
  CHECK(margin_risk(s, ref, 2.0) == 1.0);
}

TEST_CASE("property: zero-one risk equals one minus accuracy") {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng.below(50);
    const Dataset d = phd::testing::gen_dataset(rng, n, 2);
    const Hypothesis h = Hypothesis::linear({rng.normal(), rng.normal()}, rng.normal());
    const auto pred = h.predict(d.x);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) correct += pred[i] == d.labels()[i];
    CHECK(zero_one(h, d) == static_cast<double>(n - correct) / static_cast<double>(n));
    CHECK(std::abs(zero_one(h, d) - (1.0 - static_cast<double>(correct) / static_cast<double>(n))) <=
          1e-15);
  }
}

TEST_CASE("zero-one loss is symmetric and obeys the triangle inequality") {
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) {
        const std::vector<int> va{a}, vb{b}, vc{c};
        CHECK(disagreement(va, vb) == disagreement(vb, va));
        CHECK(disagreement(va, vc) <= disagreement(va, vb) + disagreement(vb, vc));
      }
}

TEST_CASE("separable blobs: linear model reaches zero training error") {
  const Dataset d = blobs_2d(200, 4, false);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.learning_rate = 1e-2;
  cfg.seed = 1;
  const auto arch = Architecture::linear(2);
  const Hypothesis h = train_erm(d, arch, cfg, LossSpec::surrogate_for(arch));
  CHECK(zero_one(h, d) == 0.0);
  CHECK(h.provenance().final_loss <= h.provenance().initial_loss);
}

TEST_CASE("one-class data gives a constant predictor") {
  Rng rng(5);
  Dataset d = phd::testing::gen_dataset(rng, 30, 2);
  d.y = std::vector<int>(30, 1);
  TrainConfig cfg;
  cfg.learning_rate = 1e-1;
  const auto arch = Architecture::linear(2);
  const Hypothesis h = train_erm(d, arch, cfg, LossSpec::surrogate_for(arch));
  CHECK(zero_one(h, d) == 0.0);
}

TEST_CASE("XOR: linear fails, MLP(16,16) fits") {
  const Dataset d = blobs_2d(400, 6, true);
  // Brute-force best half-plane through a grid of directions and offsets.
  double best = 1.0;
  for (int ang = 0; ang < 360; ++ang) {
    const double th = ang * 3.14159265358979323846 / 180.0;
    for (double off = -3.0; off <= 3.0; off += 0.1) {
      const Hypothesis h = Hypothesis::linear({std::cos(th), std::sin(th)}, off);
      best = std::min(best, zero_one(h, d));
    }
  }
  CHECK(best >= 0.25);

  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.learning_rate = 1e-2;
  cfg.seed = 2;
  const auto lin = Architecture::linear(2);
  CHECK(zero_one(train_erm(d, lin, cfg, LossSpec::surrogate_for(lin)), d) >= 0.25);
  const auto mlp = Architecture::mlp(2, {16, 16});
  CHECK(zero_one(train_erm(d, mlp, cfg, LossSpec::surrogate_for(mlp)), d) <= 0.05);
}

TEST_CASE("training is deterministic given the seed") {
  const Dataset d = blobs_2d(100, 7, true);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 9;
  const auto mlp = Architecture::mlp(2, {8});
  const auto a = train_erm(d, mlp, cfg, LossSpec::surrogate_for(mlp));
  const auto b = train_erm(d, mlp, cfg, LossSpec::surrogate_for(mlp));
  CHECK(a == b);
}

TEST_CASE("gradient check: linear logistic and MLP cross-entropy") {
  Rng rng(8);
  Dataset probe4 = phd::testing::gen_dataset(rng, 4, 3);
  CHECK(grad_check(Architecture::linear(3), LossSpec::logistic(), probe4) < 1e-6);
  Matrix x = phd::testing::gen_matrix(rng, 8, 4);
  const Dataset probe8 = make_dataset(x, phd::testing::gen_labels(rng, 8, 3), 3, "probe");
  CHECK(grad_check(Architecture::mlp(4, {8, 8}, 3), LossSpec::softmax_ce(), probe8) < 1e-4);
  CHECK(grad_check(Architecture::mlp(4, {8, 8}, 2), LossSpec::logistic(),
                   make_dataset(x, phd::testing::gen_labels(rng, 8), 2, "probe")) < 1e-4);
}

TEST_CASE("gradient on an all-zero probe is finite") {
  const Dataset zero = make_dataset(Matrix(4, 3), std::vector<int>{0, 1, 0, 1}, 2, "zero");
  const double e = grad_check(Architecture::mlp(3, {8, 8}), LossSpec::logistic(), zero);
  CHECK(std::isfinite(e));
  const Hypothesis h = Hypothesis::initialize(Architecture::mlp(3, {8, 8}), 1);
  std::vector<double> g;
  loss_and_gradient(h, zero.x, zero.labels(), {}, LossSpec::logistic(), g);
  for (double v : g) CHECK(std::isfinite(v));
}

TEST_CASE("AMSGrad second-moment maximum never decreases") {
  Rng rng(10);
  AmsGrad opt(5, 1e-2);
  std::vector<double> p(5, 0.0), g(5), prev(5, 0.0);
  for (int step = 0; step < 50; ++step) {
    for (auto& v : g) v = rng.normal() * (step % 7 == 0 ? 5.0 : 0.1);
    opt.step(p, g);
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(opt.vmax()[i] >= prev[i]);
      prev[i] = opt.vmax()[i];
    }
  }
}

TEST_CASE("save and load round trip") {
  const auto path = (std::filesystem::temp_directory_path() / "phd_unit_model.bin").string();
  const Hypothesis h = Hypothesis::initialize(Architecture::mlp(3, {5}, 4), 12);
  save_hypothesis(h, path);
  CHECK(load_hypothesis(path) == h);
  CHECK(std::filesystem::exists(path + ".json"));
}
