#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "generators.hpp"
#include "phd/kernels.hpp"

using namespace phd;
namespace ks = phd::kernels;
using phd::testing::gen_matrix;

namespace {

bool bit_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data().data(), b.data().data(), a.data().size() * sizeof(double)) == 0;
}

std::vector<std::uint64_t> random_bits(Rng& rng, std::size_t rows, std::size_t words, std::size_t n) {
  std::vector<std::uint64_t> bits(rows * words, 0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t i = 0; i < n; ++i)
      if (rng.below(2)) bits[r * words + i / 64] |= std::uint64_t{1} << (i % 64);
  return bits;
}

}  // namespace

TEST_CASE("serial and parallel gemm are bit-identical") {
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t m = 1 + rng.below(70), k = 1 + rng.below(70), n = 1 + rng.below(70);
    const Matrix a = gen_matrix(rng, m, k), b = gen_matrix(rng, k, n);
    const Matrix at = gen_matrix(rng, k, m), bt = gen_matrix(rng, n, k);
    Matrix c1(m, n), c2(m, n);
    ks::serial::gemm_nn(m, k, n, a.data().data(), b.data().data(), c1.data().data());
    ks::parallel::gemm_nn(m, k, n, a.data().data(), b.data().data(), c2.data().data());
    CHECK(bit_equal(c1, c2));
    ks::serial::gemm_tn(m, k, n, at.data().data(), b.data().data(), c1.data().data());
    ks::parallel::gemm_tn(m, k, n, at.data().data(), b.data().data(), c2.data().data());
    CHECK(bit_equal(c1, c2));
    CHECK(max_abs_diff(c1, matmul(transpose(at), b)) < 1e-12);
    ks::serial::gemm_nt(m, k, n, a.data().data(), bt.data().data(), c1.data().data());
    ks::parallel::gemm_nt(m, k, n, a.data().data(), bt.data().data(), c2.data().data());
    CHECK(bit_equal(c1, c2));
    CHECK(max_abs_diff(c1, matmul(a, transpose(bt))) < 1e-12);
  }
}

TEST_CASE("suffix extrema match brute force and agree across executors") {
  Rng rng(4);
  for (int trial = 0; trial < 15; ++trial) {
    const std::size_t n = 2 + rng.below(40), d = 1 + rng.below(4);
    const Matrix x = phd::testing::gen_grid_matrix(rng, n, d, 6);
    std::vector<double> u(n);
    for (auto& v : u) v = rng.normal();
    const auto cols = ks::sort_columns(x);
    std::vector<std::vector<double>> th(d);
    for (std::size_t f = 0; f < d; ++f) {
      for (int t = -1; t < 6; ++t) th[f].push_back(t + 0.5);
    }
    const auto s = ks::serial::suffix_extrema(cols, th, u);
    const auto p = ks::parallel::suffix_extrema(cols, th, u);
    REQUIRE(s.size() == d);
    for (std::size_t f = 0; f < d; ++f) {
      double best = -1e300, worst = 1e300;
      for (double t : th[f]) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          if (x(i, f) > t) sum += u[i];
        best = std::max(best, sum);
        worst = std::min(worst, sum);
      }
      CHECK(s[f].max_value == doctest::Approx(best).epsilon(1e-12));
      CHECK(s[f].min_value == doctest::Approx(worst).epsilon(1e-12));
      CHECK(s[f].max_value == p[f].max_value);
      CHECK(s[f].min_value == p[f].min_value);
      CHECK(s[f].max_index == p[f].max_index);
      CHECK(s[f].min_index == p[f].min_index);
    }
  }
}

TEST_CASE("max pair gap matches brute force and agrees across executors") {
  Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t count = 1 + rng.below(30);
    const std::size_t ns = 1 + rng.below(150), nt = 1 + rng.below(150);
    const std::size_t ws = (ns + 63) / 64, wt = (nt + 63) / 64;
    const auto bs = random_bits(rng, count, ws, ns);
    const auto bt = random_bits(rng, count, wt, nt);
    auto bit = [](const std::vector<std::uint64_t>& b, std::size_t w, std::size_t r, std::size_t i) {
      return (b[r * w + i / 64] >> (i % 64)) & 1u;
    };
    double best = -1.0;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t j = i; j < count; ++j) {
        double cs = 0, ct = 0;
        for (std::size_t q = 0; q < ns; ++q) cs += bit(bs, ws, i, q) != bit(bs, ws, j, q);
        for (std::size_t q = 0; q < nt; ++q) ct += bit(bt, wt, i, q) != bit(bt, wt, j, q);
        const double g = std::abs(ct / nt - cs / ns);
        if (g > best) best = g, bi = i, bj = j;
      }
    const auto s = ks::serial::max_pair_gap(count, bs, ws, ns, bt, wt, nt);
    const auto p = ks::parallel::max_pair_gap(count, bs, ws, ns, bt, wt, nt);
    CHECK(s.value == doctest::Approx(best).epsilon(1e-12));
    CHECK(s.first == bi);
    CHECK(s.second == bj);
    CHECK(p.value == s.value);
    CHECK(p.first == s.first);
    CHECK(p.second == s.second);
  }
}

TEST_CASE("euclidean cost matches direct distances and agrees across executors") {
  Rng rng(13);
  const Matrix a = gen_matrix(rng, 37, 5), b = gen_matrix(rng, 29, 5);
  const Matrix s = ks::serial::euclidean_cost(a, b);
  const Matrix p = ks::parallel::euclidean_cost(a, b);
  CHECK(bit_equal(s, p));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double q = 0;
      for (std::size_t f = 0; f < 5; ++f) q += (a(i, f) - b(j, f)) * (a(i, f) - b(j, f));
      CHECK(s(i, j) == doctest::Approx(std::sqrt(q)).epsilon(1e-12));
    }
}
