#pragma once

#include <cstdint>
#include <vector>

#include "phd/data.hpp"
#include "phd/numkit.hpp"

namespace phd::testing {

// Small hand-rolled generators for property tests.

inline Matrix gen_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = scale * rng.normal();
  return m;
}

// Values on a coarse grid so that ties between rows are common.
inline Matrix gen_grid_matrix(Rng& rng, std::size_t rows, std::size_t cols, int levels = 5) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = static_cast<double>(rng.below(static_cast<std::size_t>(levels)));
  return m;
}

inline std::vector<int> gen_labels(Rng& rng, std::size_t n, int k = 2) {
  std::vector<int> y(n);
  for (auto& v : y) v = static_cast<int>(rng.below(static_cast<std::size_t>(k)));
  return y;
}

inline Dataset gen_dataset(Rng& rng, std::size_t n, std::size_t d, bool grid = false) {
  Matrix x = grid ? gen_grid_matrix(rng, n, d) : gen_matrix(rng, n, d);
  return make_dataset(std::move(x), gen_labels(rng, n), 2, "generated");
}

inline Matrix gen_psd(Rng& rng, std::size_t n) {
  const Matrix a = gen_matrix(rng, n, n);
  Matrix s = matmul(transpose(a), a);
  for (std::size_t i = 0; i < n; ++i) s(i, i) += 0.1;
  return s;
}

}  // namespace phd::testing
