#include <doctest.h>

#include <cmath>

#include "generators.hpp"
#include "phd/adapt.hpp"
#include "phd/error.hpp"

using namespace phd;

namespace {

double rel_frobenius(const Matrix& a, const Matrix& b) {
  Matrix d = a;
  for (std::size_t i = 0; i < d.data().size(); ++i) d.data()[i] -= b.data()[i];
  return frobenius(d) / frobenius(b);
}

SelectionConfig cheap_selection(std::size_t d, std::size_t top_k) {
  SelectionConfig sc;
  sc.measure = SelectionMeasure::w1;
  sc.top_k = top_k;
  sc.arch = Architecture::linear(d);
  sc.train.epochs = 3;
  sc.self_train.base = sc.train;
  sc.self_train.rounds = 1;
  return sc;
}

}  // namespace

TEST_CASE("CORAL of a sample onto itself is the identity") {
  Rng rng(1);
  const Dataset s = make_dataset(phd::testing::gen_matrix(rng, 200, 3), std::nullopt, 2, "s");
  CHECK(max_abs_diff(coral(s, s).x, s.x) < 1e-6);
}

TEST_CASE("CORAL halves a one-dimensional source of variance 4 onto variance 1") {
  Rng rng(2);
  Matrix xs(4000, 1), xt(4000, 1);
  for (std::size_t i = 0; i < 4000; ++i) {
    xs(i, 0) = 2.0 * rng.normal();
    xt(i, 0) = rng.normal();
  }
  const Dataset s = make_dataset(xs, std::nullopt, 2, "s"), t = make_dataset(xt, std::nullopt, 2, "t");
  const double cs = covariance(xs)(0, 0), ct = covariance(xt)(0, 0);
  const double scale = std::sqrt(ct / cs);
  const Dataset out = coral(s, t, 1e-12);
  const double ms = column_means(xs)[0], mt = column_means(xt)[0];
  for (std::size_t i = 0; i < 10; ++i)
    CHECK(out.x(i, 0) == doctest::Approx((xs(i, 0) - ms) * scale + mt).epsilon(1e-9));
  CHECK(scale == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("CORAL matches the target covariance in three dimensions") {
  Rng rng(3);
  const Matrix a = phd::testing::gen_matrix(rng, 3, 3);
  Matrix xt = matmul(phd::testing::gen_matrix(rng, 1000, 3), a);
  const Dataset s = make_dataset(phd::testing::gen_matrix(rng, 1000, 3, 3.0), std::vector<int>(1000, 1), 2, "s");
  const Dataset t = make_dataset(xt, std::nullopt, 2, "t");
  const Dataset out = coral(s, t);
  CHECK(rel_frobenius(covariance(out.x), covariance(xt)) < 0.05);
  CHECK(out.labels() == s.labels());
}

TEST_CASE("CORAL rejects empty and mismatched inputs") {
  Rng rng(4);
  const Dataset s = make_dataset(phd::testing::gen_matrix(rng, 5, 2), std::nullopt, 2, "s");
  const Dataset t = make_dataset(phd::testing::gen_matrix(rng, 5, 3), std::nullopt, 2, "t");
  CHECK_THROWS_AS(coral(s, t), ContractError);
}

TEST_CASE("ranking is ascending with ties to the lower index") {
  CHECK(rank_ascending({0.3, 0.1, 0.3, 0.1}) == std::vector<std::size_t>{1, 3, 0, 2});
}

TEST_CASE("property: ranking is invariant to positive scaling") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(1 + rng.below(12)), w(v.size());
    for (auto& x : v) x = static_cast<double>(rng.below(5));
    const double c = rng.uniform(0.1, 10.0);
    for (std::size_t i = 0; i < v.size(); ++i) w[i] = c * v[i];
    CHECK(rank_ascending(v) == rank_ascending(w));
  }
}

TEST_CASE("selection config errors") {
  Rng rng(6);
  const Dataset src = phd::testing::gen_dataset(rng, 20, 2);
  const Dataset t = phd::testing::gen_dataset(rng, 20, 2).without_labels();
  CHECK_THROWS_AS(select_sources({src, src}, {true, true}, t, cheap_selection(2, 3)), ConfigError);
  CHECK_THROWS_AS(select_sources({src}, {true}, t, cheap_selection(2, 1)), ConfigError);
  CHECK_THROWS_AS(parse_selection_measure("kl"), ConfigError);
}

TEST_CASE("identical clean sources score K") {
  Rng rng(7);
  const Dataset src = phd::testing::gen_dataset(rng, 30, 2);
  const Dataset t = phd::testing::gen_dataset(rng, 30, 2);
  const std::vector<Dataset> pool(4, src);
  for (auto m : {SelectionMeasure::w1, SelectionMeasure::phd}) {
    auto sc = cheap_selection(2, 3);
    sc.measure = m;
    const auto out = select_sources(pool, std::vector<bool>(4, true), t, sc);
    CHECK(out.score == 3);
    if (m == SelectionMeasure::w1) CHECK(out.chosen == std::vector<std::size_t>{0, 1, 2});
    CHECK(out.target_accuracy.has_value());
  }
}
