#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "generators.hpp"
#include "phd/error.hpp"
#include "phd/kernels.hpp"
#include "phd/numkit.hpp"

using namespace phd;
using phd::testing::gen_matrix;

namespace {

Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

Matrix naive_covariance(const Matrix& x) {
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> mu(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < d; ++f) mu[f] += x(i, f) / static_cast<double>(n);
  Matrix c(d, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b)
        c(a, b) += (x(i, a) - mu[a]) * (x(i, b) - mu[b]) / static_cast<double>(n - 1);
  return c;
}

}  // namespace

TEST_CASE("covariance of identical rows is zero") {
  Matrix x(2, 3, 1.5);
  CHECK(frobenius(covariance(x)) == 0.0);
}

TEST_CASE("covariance of {0, 2} is 2") {
  Matrix x(2, 1, std::vector<double>{0.0, 2.0});
  CHECK(covariance(x)(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("covariance matches a direct double loop") {
  Rng rng(11);
  const Matrix x = gen_matrix(rng, 5, 3);
  CHECK(max_abs_diff(covariance(x), naive_covariance(x)) < 1e-12);
}

TEST_CASE("covariance needs two rows") {
  CHECK_THROWS_AS(covariance(Matrix(1, 2)), DegenerateInputError);
}

TEST_CASE("matmul matches the naive triple loop") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + rng.below(9), k = 1 + rng.below(9), n = 1 + rng.below(9);
    const Matrix a = gen_matrix(rng, m, k), b = gen_matrix(rng, k, n);
    CHECK(max_abs_diff(matmul(a, b), naive_matmul(a, b)) < 1e-12);
  }
}

TEST_CASE("inverse square root of the identity") {
  const Matrix i = Matrix::identity(4);
  CHECK(max_abs_diff(sym_inv_sqrt(i, 1e-12), i) < 1e-8);
}

TEST_CASE("inverse square root of diag(4, 9)") {
  const std::vector<double> d{4.0, 9.0};
  const Matrix r = sym_inv_sqrt(Matrix::diagonal(d), 1e-14);
  CHECK(r(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(std::abs(r(0, 1)) < 1e-14);
}

TEST_CASE("property: B * B * A = I for B = A^(-1/2)") {
  Rng rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    const Matrix a = phd::testing::gen_psd(rng, 4);
    const Matrix b = sym_inv_sqrt(a, 1e-12);
    CHECK(max_abs_diff(matmul(matmul(b, b), a), Matrix::identity(4)) < 1e-8);
    const Matrix s = sym_sqrt(a);
    CHECK(max_abs_diff(matmul(s, s), a) < 1e-9);
  }
}

TEST_CASE("asymmetric input is rejected") {
  Matrix a = Matrix::identity(2);
  a(0, 1) = 1e-3;
  CHECK_THROWS_AS(sym_inv_sqrt(a, 1e-6), ContractError);
}

TEST_CASE("property: eigen decomposition reconstructs the matrix") {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.below(6);
    const Matrix a = phd::testing::gen_psd(rng, n);
    const auto e = symmetric_eigen(a);
    for (std::size_t j = 1; j < n; ++j) CHECK(e.values[j - 1] <= e.values[j]);
    const Matrix back =
        matmul(matmul(e.vectors, Matrix::diagonal(e.values)), transpose(e.vectors));
    CHECK(max_abs_diff(back, a) < 1e-9 * (1.0 + frobenius(a)));
  }
}

TEST_CASE("Kahan sum recovers small addends") {
  KahanSum k;
  k.add(1e16);
  for (int i = 0; i < 1000; ++i) k.add(1.0);
  k.add(-1e16);
  CHECK(k.value() == 1000.0);
}

TEST_CASE("Rng streams are reproducible and children do not depend on consumption") {
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(42);
  const auto before = c.child(3).seed();
  for (int i = 0; i < 100; ++i) c.next_u64();
  CHECK(c.child(3).seed() == before);
  CHECK(Rng(42).child(3).seed() != Rng(42).child(4).seed());
}

TEST_CASE("Rng variates stay in range") {
  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.below(7) < 7);
  }
  auto p = r.permutation(50);
  std::sort(p.begin(), p.end());
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] == i);
}

TEST_CASE("normal variates have unit variance") {
  Rng r(8);
  KahanSum s, s2;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s.add(z);
    s2.add(z * z);
  }
  CHECK(std::abs(s.value() / n) < 0.01);
  CHECK(std::abs(s2.value() / n - 1.0) < 0.02);
}
