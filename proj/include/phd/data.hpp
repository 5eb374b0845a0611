#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "phd/numkit.hpp"

namespace phd {

// Feature matrix plus optional integer labels in {0..k-1}. Binary tasks use
// {0, 1}; label 1 is the "+1" class.
struct Dataset {
  Matrix x;
  std::optional<std::vector<int>> y;
  int k = 2;
  std::string domain_tag;

  std::size_t size() const noexcept { return x.rows(); }
  std::size_t dim() const noexcept { return x.cols(); }
  bool labeled() const noexcept { return y.has_value(); }
  const std::vector<int>& labels() const;  // throws ContractError when unlabeled

  // Throws on a broken invariant (n >= 1, finite features, labels < k).
  void validate() const;

  Dataset subset(std::span<const std::size_t> rows) const;
  Dataset without_labels() const;
};

Dataset make_dataset(Matrix x, std::optional<std::vector<int>> y, int k, std::string tag);
Dataset concat(const Dataset& a, const Dataset& b);

enum class LabelRule { linear, xor_rule, moons, blobs };

LabelRule parse_label_rule(const std::string& name);
std::string to_string(LabelRule rule);

// Two-domain synthetic generator. The source is drawn from a fixed mixture;
// the target is an independent draw of the same mixture, rotated by `rotate`
// radians in the (feature 0, feature 1) plane and then translated by `shift`.
// Labels come from the rule applied before the transform.
//
//   linear: components at +-1.5 e0 (std 0.5), label = [x0 > 0]
//   xor:    components at (+-1.5, +-1.5) (std 0.5), label = [x0 > 0] xor [x1 > 0]
//   moons:  two interleaved half circles in (x0, x1), exactly balanced labels
//   blobs:  k components with centers fixed by (k, informative, layout_seed),
//           spread `blob_std`; label = component
//
// Features at index >= `informative` carry no label information and are
// N(0, nuisance_std^2) (nuisance_std may be 0).
struct PairSpec {
  std::size_t n = 200;
  std::size_t d = 2;
  std::vector<double> shift;  // empty = no shift, otherwise length d
  double rotate = 0.0;
  LabelRule rule = LabelRule::linear;
  int k = 2;                     // classes, used by blobs
  std::size_t informative = 0;   // 0 = rule default (1 for linear, 2 otherwise, d for blobs)
  double nuisance_std = 0.5;
  double blob_std = 0.5;
  double blob_radius = 2.0;
  std::uint64_t layout_seed = 7;
  std::uint64_t seed = 0;
};

std::pair<Dataset, Dataset> gen_gaussian_pair(const PairSpec& spec);

// One draw from the source mixture of `spec` (no transform).
Dataset draw_source(const PairSpec& spec, std::uint64_t seed);

// Adds i.i.d. N(0, sigma^2) to every feature.
Dataset add_feature_noise(const Dataset& d, double sigma, std::uint64_t seed);

// IDX (big-endian) images with magic 0x00000803 and labels with 0x00000801.
// Pixel byte b becomes b / 255.
Dataset read_idx(const std::string& images_path,
                 const std::optional<std::string>& labels_path = std::nullopt);
// Writes features as round(255 x) clamped to [0, 255]. Image shape is
// rows x cols with rows * cols = dim (rows = 1 when cols is 0).
void write_idx(const Dataset& d, const std::string& images_path,
               const std::optional<std::string>& labels_path, std::size_t image_cols = 0);

// CSV with a header row. `label_col` names the label column; with
// channels > 1 consecutive groups of `channels` feature columns are averaged
// into one grayscale feature.
Dataset read_csv(const std::string& path, const std::optional<std::string>& label_col,
                 std::size_t channels = 1);
void write_csv(const Dataset& d, const std::string& path);

struct SplitSpec {
  std::vector<double> fractions;
  std::uint64_t seed = 0;
};

// Seeded shuffle, then consecutive slices. Sizes are floor(f_i n) with the
// remaining rows (up to floor(sum f n)) handed out by largest fractional
// part, ties to the lower index.
std::vector<std::vector<std::size_t>> split_indices(std::size_t n, const SplitSpec& spec);
std::vector<Dataset> split(const Dataset& d, const SplitSpec& spec);

}  // namespace phd
