#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "generators.hpp"
#include "phd/data.hpp"
#include "phd/error.hpp"

using namespace phd;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path p = fs::temp_directory_path() / "phd_unit_data";
  fs::create_directories(p);
  return p;
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

std::vector<unsigned char> be(std::uint32_t v) {
  return {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
}

std::vector<unsigned char> idx_images(const std::vector<std::vector<unsigned char>>& imgs,
                                      std::uint32_t rows, std::uint32_t cols) {
  std::vector<unsigned char> b;
  for (auto v : {0x00000803u, static_cast<std::uint32_t>(imgs.size()), rows, cols}) {
    const auto w = be(v);
    b.insert(b.end(), w.begin(), w.end());
  }
  for (const auto& im : imgs) b.insert(b.end(), im.begin(), im.end());
  return b;
}

std::vector<unsigned char> idx_labels(const std::vector<unsigned char>& ys) {
  std::vector<unsigned char> b;
  for (auto v : {0x00000801u, static_cast<std::uint32_t>(ys.size())}) {
    const auto w = be(v);
    b.insert(b.end(), w.begin(), w.end());
  }
  b.insert(b.end(), ys.begin(), ys.end());
  return b;
}

double variance(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST_CASE("split 0.5/0.5 of ten rows gives five and five, disjoint") {
  const auto parts = split_indices(10, {{0.5, 0.5}, 3});
  REQUIRE(parts.size() == 2);
  CHECK(parts[0].size() == 5);
  CHECK(parts[1].size() == 5);
  std::set<std::size_t> all(parts[0].begin(), parts[0].end());
  all.insert(parts[1].begin(), parts[1].end());
  CHECK(all.size() == 10);
  CHECK(split_indices(10, {{0.5, 0.5}, 3}) == parts);
}

TEST_CASE("property: split sizes follow largest remainder and never overlap") {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + rng.below(4);
    std::vector<double> f(m);
    double tot = 0.0;
    for (auto& v : f) tot += (v = 0.05 + rng.uniform());
    const double scale = rng.uniform(0.3, 1.0) / tot;
    for (auto& v : f) v *= scale;
    const double smallest = *std::min_element(f.begin(), f.end());
    const std::size_t n = static_cast<std::size_t>(std::ceil(1.0 / smallest)) + rng.below(200);
    const auto parts = split_indices(n, {f, rng.next_u64()});
    std::set<std::size_t> seen;
    std::size_t total = 0;
    double fsum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      fsum += f[i];
      const double exact = f[i] * static_cast<double>(n);
      CHECK(parts[i].size() >= static_cast<std::size_t>(std::floor(exact + 1e-9)));
      CHECK(parts[i].size() <= static_cast<std::size_t>(std::floor(exact + 1e-9)) + 1);
      total += parts[i].size();
      for (auto r : parts[i]) {
        CHECK(r < n);
        seen.insert(r);
      }
    }
    CHECK(seen.size() == total);
    CHECK(total == static_cast<std::size_t>(std::floor(fsum * static_cast<double>(n) + 1e-9)));
  }
}

TEST_CASE("split rejects fractions above one or yielding an empty subset") {
  CHECK_THROWS_AS(split_indices(10, {{0.7, 0.7}, 0}), ConfigError);
  CHECK_THROWS_AS(split_indices(10, {{0.05, 0.5}, 0}), ConfigError);
}

TEST_CASE("IDX pixels 0 and 255 map to 0 and 1") {
  const auto dir = scratch_dir();
  write_bytes(dir / "img.idx", idx_images({{0, 255, 255, 0}, {255, 255, 0, 0}}, 2, 2));
  write_bytes(dir / "lab.idx", idx_labels({3, 1}));
  const Dataset d = read_idx((dir / "img.idx").string(), (dir / "lab.idx").string());
  REQUIRE(d.size() == 2);
  REQUIRE(d.dim() == 4);
  CHECK(d.x(0, 0) == 0.0);
  CHECK(d.x(0, 1) == 1.0);
  CHECK(d.x(1, 0) == 1.0);
  CHECK(d.x(1, 3) == 0.0);
  CHECK(d.labels() == std::vector<int>{3, 1});
  CHECK(d.k == 4);
}

TEST_CASE("IDX label count mismatch is a format error") {
  const auto dir = scratch_dir();
  write_bytes(dir / "img3.idx", idx_images({{0}, {1}, {2}}, 1, 1));
  write_bytes(dir / "lab2.idx", idx_labels({0, 1}));
  CHECK_THROWS_AS(read_idx((dir / "img3.idx").string(), (dir / "lab2.idx").string()), FormatError);
}

TEST_CASE("IDX bad magic and truncation are format errors") {
  const auto dir = scratch_dir();
  auto bytes = idx_images({{0, 1}}, 1, 2);
  bytes[3] = 0x01;
  write_bytes(dir / "bad.idx", bytes);
  CHECK_THROWS_AS(read_idx((dir / "bad.idx").string()), FormatError);
  auto trunc = idx_images({{0, 1}}, 1, 2);
  trunc.pop_back();
  write_bytes(dir / "trunc.idx", trunc);
  CHECK_THROWS_AS(read_idx((dir / "trunc.idx").string()), FormatError);
}

TEST_CASE("IDX round trip on byte-aligned features") {
  const auto dir = scratch_dir();
  Rng rng(2);
  Matrix x(6, 4);
  for (double& v : x.data()) v = static_cast<double>(rng.below(256)) / 255.0;
  const Dataset d = make_dataset(x, std::vector<int>{0, 1, 2, 0, 1, 2}, 3, "idx");
  write_idx(d, (dir / "rt.idx").string(), (dir / "rt_lab.idx").string(), 2);
  const Dataset back = read_idx((dir / "rt.idx").string(), (dir / "rt_lab.idx").string());
  CHECK(back.x == d.x);
  CHECK(back.labels() == d.labels());
}

TEST_CASE("CSV round trip is exact") {
  const auto dir = scratch_dir();
  Rng rng(6);
  const Dataset d = phd::testing::gen_dataset(rng, 17, 3);
  write_csv(d, (dir / "rt.csv").string());
  const Dataset back = read_csv((dir / "rt.csv").string(), std::string("label"));
  CHECK(back.x == d.x);
  CHECK(back.labels() == d.labels());
}

TEST_CASE("ragged CSV is a format error") {
  const auto dir = scratch_dir();
  write_text(dir / "ragged.csv", "a,b,label\n1,2,0\n3,1\n");
  CHECK_THROWS_AS(read_csv((dir / "ragged.csv").string(), std::string("label")), FormatError);
  write_text(dir / "nan.csv", "a,label\nx,0\n");
  CHECK_THROWS_AS(read_csv((dir / "nan.csv").string(), std::string("label")), FormatError);
}

TEST_CASE("CSV channels average into grayscale") {
  const auto dir = scratch_dir();
  write_text(dir / "rgb.csv", "r,g,b,label\n0.3,0.6,0.9,1\n");
  const Dataset d = read_csv((dir / "rgb.csv").string(), std::string("label"), 3);
  REQUIRE(d.dim() == 1);
  CHECK(d.x(0, 0) == doctest::Approx(0.6));
}

TEST_CASE("feature noise: zero sigma is the identity") {
  Rng rng(1);
  const Dataset d = phd::testing::gen_dataset(rng, 20, 3);
  CHECK(add_feature_noise(d, 0.0, 5).x == d.x);
}

TEST_CASE("feature noise: sigma 0.3 inflates variance by about 0.09") {
  Matrix x(20000, 1, 0.0);
  const Dataset d = make_dataset(x, std::nullopt, 2, "zero");
  const Dataset noisy = add_feature_noise(d, 0.3, 9);
  const double v = variance(noisy.x.data());
  CHECK(std::abs(v - 0.09) < 0.2 * 0.09);
}

TEST_CASE("feature noise: negative sigma is a config error") {
  Rng rng(1);
  const Dataset d = phd::testing::gen_dataset(rng, 5, 2);
  CHECK_THROWS_AS(add_feature_noise(d, -0.1, 0), ConfigError);
}

TEST_CASE("generator is deterministic and applies rotation then shift") {
  PairSpec spec;
  spec.n = 50;
  spec.d = 3;
  spec.rotate = 0.0;
  spec.shift = {1.0, -2.0, 0.5};
  spec.seed = 17;
  const auto [s1, t1] = gen_gaussian_pair(spec);
  const auto [s2, t2] = gen_gaussian_pair(spec);
  CHECK(s1.x == s2.x);
  CHECK(t1.x == t2.x);
  CHECK(s1.labels() == s2.labels());
  for (std::size_t i = 0; i < s1.size(); ++i) CHECK(s1.labels()[i] == (s1.x(i, 0) > 0 ? 1 : 0));
}

TEST_CASE("generator rejects a shift of the wrong length") {
  PairSpec spec;
  spec.d = 3;
  spec.shift = {1.0};
  CHECK_THROWS_AS(gen_gaussian_pair(spec), ConfigError);
}

TEST_CASE("moons labels are exactly balanced") {
  PairSpec spec;
  spec.n = 101;
  spec.rule = LabelRule::moons;
  const auto [s, t] = gen_gaussian_pair(spec);
  const auto& y = s.labels();
  const long ones = std::count(y.begin(), y.end(), 1);
  CHECK(std::abs(2 * ones - static_cast<long>(y.size())) <= 1);
}

TEST_CASE("unknown label rule is a config error") {
  CHECK_THROWS_AS(parse_label_rule("spiral"), ConfigError);
  CHECK(parse_label_rule(to_string(LabelRule::xor_rule)) == LabelRule::xor_rule);
}
