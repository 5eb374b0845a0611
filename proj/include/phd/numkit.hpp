#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace phd {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix transpose(const Matrix& a);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix select_rows(const Matrix& a, std::span<const std::size_t> rows);
Matrix vstack(const Matrix& top, const Matrix& bottom);
double max_abs_diff(const Matrix& a, const Matrix& b);
double frobenius(const Matrix& a);

std::vector<double> column_means(const Matrix& x);

// Unbiased sample covariance (divides by rows - 1). Requires rows >= 2.
Matrix covariance(const Matrix& x);

struct SymmetricEigen {
  std::vector<double> values;  // ascending
  Matrix vectors;              // column j pairs with values[j]
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix.
SymmetricEigen symmetric_eigen(const Matrix& a);

// (A + ridge I)^(-1/2) for symmetric PSD A.
Matrix sym_inv_sqrt(const Matrix& a, double ridge);
// (A + ridge I)^(1/2) for symmetric PSD A.
Matrix sym_sqrt(const Matrix& a, double ridge = 0.0);

// Compensated sum; adding values in a fixed order gives a fixed result.
class KahanSum {
 public:
  void add(double v) noexcept {
    const double y = v - carry_;
    const double t = sum_ + y;
    carry_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const noexcept { return sum_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// Seeded random stream over std::mt19937_64.
///
/// Child streams: `child(k)` is seeded with splitmix64 applied to
/// `seed ^ (0x9E3779B97F4A7C15 * (k + 1))`, so children depend only on the
/// parent seed and the stream index, never on how much of the parent stream
/// was consumed. Uniform and normal variates are produced by explicit
/// transforms (not std distributions) so streams are identical across
/// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }
  Rng child(std::uint64_t stream) const;

  std::uint64_t next_u64() { return engine_(); }
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);   // [lo, hi)
  double normal();                       // N(0, 1)
  std::size_t below(std::size_t n);      // uniform in [0, n)
  int sign() { return (next_u64() >> 63) ? 1 : -1; }

  std::vector<std::size_t> permutation(std::size_t n);
  void shuffle(std::span<std::size_t> items);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

Matrix random_normal(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace phd
