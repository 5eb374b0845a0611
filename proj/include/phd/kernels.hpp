#pragma once

// Data-parallel inner loops. Every kernel exists twice with the same
// signature: `serial::` is the plain reference loop kept for testing,
// `parallel::` is the OpenMP version used by the library. Parallel versions
// split work so that each output element is produced by exactly one thread
// in the serial order, and reductions are done in a fixed order afterwards,
// so both produce bit-identical results.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "phd/numkit.hpp"

namespace phd::kernels {

enum class Exec { serial, parallel };

// One feature column of a sample, sorted ascending.
struct SortedColumn {
  std::vector<double> values;
  std::vector<std::uint32_t> order;  // row index of values[i]
};

std::vector<SortedColumn> sort_columns(const Matrix& x);

// Extremes over thresholds t_j (ascending) of U_j = sum_{i : x_i > t_j} u_i.
struct SuffixExtrema {
  double max_value = 0.0;
  std::size_t max_index = 0;
  double min_value = 0.0;
  std::size_t min_index = 0;
  bool any = false;  // false when the feature has no thresholds
};

struct PairGap {
  double value = 0.0;
  std::size_t first = 0;
  std::size_t second = 0;
};

#define PHD_KERNEL_DECLS                                                                     \
  /* C = A * B with A m x k, B k x n (row-major). */                                         \
  void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, \
               double* c);                                                                   \
  /* C = A^T * B with A k x m, B k x n. */                                                   \
  void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, \
               double* c);                                                                   \
  /* C = A * B^T with A m x k, B n x k. */                                                   \
  void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, \
               double* c);                                                                   \
  std::vector<SuffixExtrema> suffix_extrema(std::span<const SortedColumn> columns,           \
                                            std::span<const std::vector<double>> thresholds, \
                                            std::span<const double> u);                      \
  /* max over pairs (i <= j) of |pop(T_i ^ T_j)/n_t - pop(S_i ^ S_j)/n_s|; ties keep the    \
     lexicographically smallest pair. Rows are bit-packed predictions. */                    \
  PairGap max_pair_gap(std::size_t count, std::span<const std::uint64_t> bits_s,             \
                       std::size_t words_s, std::size_t n_s,                                 \
                       std::span<const std::uint64_t> bits_t, std::size_t words_t,           \
                       std::size_t n_t);                                                     \
  /* Euclidean distance between every row of a and every row of b. */                      \
  Matrix euclidean_cost(const Matrix& a, const Matrix& b);

namespace serial {
PHD_KERNEL_DECLS
}
namespace parallel {
PHD_KERNEL_DECLS
}

#undef PHD_KERNEL_DECLS

}  // namespace phd::kernels
