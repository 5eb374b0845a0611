#include "phd/kernels.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "phd/error.hpp"

namespace phd::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1u << 15;

inline void gemm_nn_row(std::size_t i, std::size_t k, std::size_t n, const double* a,
                        const double* b, double* c) {
  double* ci = c + i * n;
  std::fill(ci, ci + n, 0.0);
  const double* ai = a + i * k;
  for (std::size_t p = 0; p < k; ++p) {
    const double av = ai[p];
    const double* bp = b + p * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
  }
}

inline void gemm_tn_row(std::size_t i, std::size_t m, std::size_t k, std::size_t n,
                        const double* a, const double* b, double* c) {
  double* ci = c + i * n;
  std::fill(ci, ci + n, 0.0);
  for (std::size_t p = 0; p < k; ++p) {
    const double av = a[p * m + i];
    const double* bp = b + p * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
  }
}

inline void gemm_nt_row(std::size_t i, std::size_t k, std::size_t n, const double* a,
                        const double* b, double* c) {
  const double* ai = a + i * k;
  double* ci = c + i * n;
  for (std::size_t j = 0; j < n; ++j) {
    const double* bj = b + j * k;
    double s = 0.0;
    for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
    ci[j] = s;
  }
}

SuffixExtrema sweep_feature(const SortedColumn& col, std::span<const double> thresholds,
                            std::span<const double> u) {
  SuffixExtrema ex;
  if (thresholds.empty()) return ex;
  double above = 0.0;
  for (std::uint32_t r : col.order) above += u[r];
  std::size_t pos = 0;
  const std::size_t n = col.values.size();
  for (std::size_t j = 0; j < thresholds.size(); ++j) {
    const double t = thresholds[j];
    while (pos < n && col.values[pos] <= t) above -= u[col.order[pos++]];
    if (!ex.any || above > ex.max_value) {
      ex.max_value = above;
      ex.max_index = j;
    }
    if (!ex.any || above < ex.min_value) {
      ex.min_value = above;
      ex.min_index = j;
    }
    ex.any = true;
  }
  return ex;
}

void require_sweep_shapes(std::span<const SortedColumn> columns,
                          std::span<const std::vector<double>> thresholds,
                          std::span<const double> u) {
  if (columns.size() != thresholds.size())
    throw ContractError("suffix_extrema: one threshold list per column required");
  for (const auto& c : columns)
    if (c.values.size() != u.size()) throw ContractError("suffix_extrema: weight length mismatch");
}

inline double pair_gap(std::size_t i, std::size_t j, std::span<const std::uint64_t> bs,
                       std::size_t ws, double inv_s, std::span<const std::uint64_t> bt,
                       std::size_t wt, double inv_t) {
  std::size_t ds = 0;
  for (std::size_t w = 0; w < ws; ++w) ds += std::popcount(bs[i * ws + w] ^ bs[j * ws + w]);
  std::size_t dt = 0;
  for (std::size_t w = 0; w < wt; ++w) dt += std::popcount(bt[i * wt + w] ^ bt[j * wt + w]);
  return std::abs(static_cast<double>(dt) * inv_t - static_cast<double>(ds) * inv_s);
}

PairGap best_for_first(std::size_t i, std::size_t count, std::span<const std::uint64_t> bs,
                       std::size_t ws, double inv_s, std::span<const std::uint64_t> bt,
                       std::size_t wt, double inv_t) {
  PairGap best{0.0, i, i};
  for (std::size_t j = i + 1; j < count; ++j) {
    const double g = pair_gap(i, j, bs, ws, inv_s, bt, wt, inv_t);
    if (g > best.value) best = {g, i, j};
  }
  return best;
}

void require_pair_shapes(std::size_t count, std::span<const std::uint64_t> bits_s,
                         std::size_t words_s, std::size_t n_s,
                         std::span<const std::uint64_t> bits_t, std::size_t words_t,
                         std::size_t n_t) {
  if (n_s == 0 || n_t == 0) throw DegenerateInputError("max_pair_gap: empty sample");
  if (bits_s.size() != count * words_s || bits_t.size() != count * words_t)
    throw ContractError("max_pair_gap: bit matrix shape mismatch");
}

}  // namespace

std::vector<SortedColumn> sort_columns(const Matrix& x) {
  std::vector<SortedColumn> cols(x.cols());
  std::vector<std::uint32_t> idx(x.rows());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    std::iota(idx.begin(), idx.end(), 0u);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
    cols[f].order = idx;
    cols[f].values.resize(x.rows());
    for (std::size_t i = 0; i < idx.size(); ++i) cols[f].values[i] = x(idx[i], f);
  }
  return cols;
}

namespace serial {

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
             double* c) {
  for (std::size_t i = 0; i < m; ++i) gemm_nn_row(i, k, n, a, b, c);
}

void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
             double* c) {
  for (std::size_t i = 0; i < m; ++i) gemm_tn_row(i, m, k, n, a, b, c);
}

void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
             double* c) {
  for (std::size_t i = 0; i < m; ++i) gemm_nt_row(i, k, n, a, b, c);
}

std::vector<SuffixExtrema> suffix_extrema(std::span<const SortedColumn> columns,
                                          std::span<const std::vector<double>> thresholds,
                                          std::span<const double> u) {
  require_sweep_shapes(columns, thresholds, u);
  std::vector<SuffixExtrema> out(columns.size());
  for (std::size_t f = 0; f < columns.size(); ++f)
    out[f] = sweep_feature(columns[f], thresholds[f], u);
  return out;
}

PairGap max_pair_gap(std::size_t count, std::span<const std::uint64_t> bits_s,
                     std::size_t words_s, std::size_t n_s, std::span<const std::uint64_t> bits_t,
                     std::size_t words_t, std::size_t n_t) {
  require_pair_shapes(count, bits_s, words_s, n_s, bits_t, words_t, n_t);
  const double inv_s = 1.0 / static_cast<double>(n_s);
  const double inv_t = 1.0 / static_cast<double>(n_t);
  PairGap best{0.0, 0, 0};
  for (std::size_t i = 0; i < count; ++i) {
    const PairGap g = best_for_first(i, count, bits_s, words_s, inv_s, bits_t, words_t, inv_t);
    if (g.value > best.value) best = g;
  }
  return best;
}

Matrix euclidean_cost(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ContractError("euclidean_cost: dimension mismatch");
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ai = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto bj = b.row(j);
      double s = 0.0;
      for (std::size_t f = 0; f < ai.size(); ++f) {
        const double d = ai[f] - bj[f];
        s += d * d;
      }
      c(i, j) = std::sqrt(s);
    }
  }
  return c;
}

}  // namespace serial

namespace parallel {

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
             double* c) {
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (m * k * n > kParallelWork)
  for (std::ptrdiff_t i = 0; i < rows; ++i)
    gemm_nn_row(static_cast<std::size_t>(i), k, n, a, b, c);
}

void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
             double* c) {
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (m * k * n > kParallelWork)
  for (std::ptrdiff_t i = 0; i < rows; ++i)
    gemm_tn_row(static_cast<std::size_t>(i), m, k, n, a, b, c);
}

void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
             double* c) {
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (m * k * n > kParallelWork)
  for (std::ptrdiff_t i = 0; i < rows; ++i)
    gemm_nt_row(static_cast<std::size_t>(i), k, n, a, b, c);
}

std::vector<SuffixExtrema> suffix_extrema(std::span<const SortedColumn> columns,
                                          std::span<const std::vector<double>> thresholds,
                                          std::span<const double> u) {
  require_sweep_shapes(columns, thresholds, u);
  std::vector<SuffixExtrema> out(columns.size());
  const auto features = static_cast<std::ptrdiff_t>(columns.size());
#pragma omp parallel for schedule(dynamic) if (columns.size() * u.size() > kParallelWork)
  for (std::ptrdiff_t f = 0; f < features; ++f)
    out[f] = sweep_feature(columns[f], thresholds[f], u);
  return out;
}

PairGap max_pair_gap(std::size_t count, std::span<const std::uint64_t> bits_s,
                     std::size_t words_s, std::size_t n_s, std::span<const std::uint64_t> bits_t,
                     std::size_t words_t, std::size_t n_t) {
  require_pair_shapes(count, bits_s, words_s, n_s, bits_t, words_t, n_t);
  const double inv_s = 1.0 / static_cast<double>(n_s);
  const double inv_t = 1.0 / static_cast<double>(n_t);
  std::vector<PairGap> per_first(count);
  const auto total = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic, 16) if (count * count > kParallelWork)
  for (std::ptrdiff_t i = 0; i < total; ++i)
    per_first[i] = best_for_first(static_cast<std::size_t>(i), count, bits_s, words_s, inv_s,
                                  bits_t, words_t, inv_t);
  PairGap best{0.0, 0, 0};
  for (const auto& g : per_first)
    if (g.value > best.value) best = g;
  return best;
}

Matrix euclidean_cost(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ContractError("euclidean_cost: dimension mismatch");
  Matrix c(a.rows(), b.rows());
  const auto rows = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static) if (a.rows() * b.rows() * a.cols() > kParallelWork)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    auto ai = a.row(static_cast<std::size_t>(i));
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto bj = b.row(j);
      double s = 0.0;
      for (std::size_t f = 0; f < ai.size(); ++f) {
        const double d = ai[f] - bj[f];
        s += d * d;
      }
      c(static_cast<std::size_t>(i), j) = std::sqrt(s);
    }
  }
  return c;
}

}  // namespace parallel

}  // namespace phd::kernels
