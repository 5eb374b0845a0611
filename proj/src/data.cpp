#include "phd/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "phd/error.hpp"

namespace phd {

const std::vector<int>& Dataset::labels() const {
  if (!y) throw ContractError("dataset '" + domain_tag + "' is unlabeled");
  return *y;
}

void Dataset::validate() const {
  if (x.rows() == 0) throw DegenerateInputError("dataset '" + domain_tag + "' has no rows");
  if (!x.all_finite()) throw ContractError("dataset '" + domain_tag + "' has non-finite features");
  if (k < 2) throw ContractError("dataset class count must be >= 2");
  if (y) {
    if (y->size() != x.rows()) throw ContractError("label count does not match row count");
    for (int v : *y)
      if (v < 0 || v >= k) throw ContractError("label " + std::to_string(v) + " outside [0, k)");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.x = select_rows(x, rows);
  out.k = k;
  out.domain_tag = domain_tag;
  if (y) {
    std::vector<int> ys(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) ys[i] = (*y)[rows[i]];
    out.y = std::move(ys);
  }
  return out;
}

Dataset Dataset::without_labels() const {
  Dataset out = *this;
  out.y.reset();
  return out;
}

Dataset make_dataset(Matrix x, std::optional<std::vector<int>> y, int k, std::string tag) {
  Dataset d{std::move(x), std::move(y), k, std::move(tag)};
  d.validate();
  return d;
}

Dataset concat(const Dataset& a, const Dataset& b) {
  if (a.dim() != b.dim()) throw ContractError("concat: feature dimension mismatch");
  if (a.labeled() != b.labeled()) throw ContractError("concat: mixing labeled and unlabeled");
  Dataset out;
  out.x = vstack(a.x, b.x);
  out.k = std::max(a.k, b.k);
  out.domain_tag = a.domain_tag;
  if (a.y) {
    std::vector<int> ys = *a.y;
    ys.insert(ys.end(), b.y->begin(), b.y->end());
    out.y = std::move(ys);
  }
  return out;
}

LabelRule parse_label_rule(const std::string& name) {
  if (name == "linear") return LabelRule::linear;
  if (name == "xor") return LabelRule::xor_rule;
  if (name == "moons") return LabelRule::moons;
  if (name == "blobs") return LabelRule::blobs;
  throw ConfigError("unknown label rule '" + name + "' (expected linear|xor|moons|blobs)");
}

std::string to_string(LabelRule rule) {
  switch (rule) {
    case LabelRule::linear: return "linear";
    case LabelRule::xor_rule: return "xor";
    case LabelRule::moons: return "moons";
    case LabelRule::blobs: return "blobs";
  }
  return "?";
}

namespace {

std::size_t informative_dims(const PairSpec& s) {
  if (s.informative != 0) return s.informative;
  switch (s.rule) {
    case LabelRule::linear: return 1;
    case LabelRule::blobs: return s.d;
    default: return 2;
  }
}

void check_spec(const PairSpec& s) {
  if (s.n < 1) throw ConfigError("generator needs n >= 1");
  if (s.d < 1) throw ConfigError("generator needs d >= 1");
  if ((s.rule == LabelRule::xor_rule || s.rule == LabelRule::moons) && s.d < 2)
    throw ConfigError(to_string(s.rule) + " rule needs d >= 2");
  if (informative_dims(s) > s.d) throw ConfigError("informative dims exceed d");
  if (s.rule == LabelRule::blobs && s.k < 2) throw ConfigError("blobs rule needs k >= 2");
  if (!s.shift.empty() && s.shift.size() != s.d)
    throw ConfigError("shift has length " + std::to_string(s.shift.size()) + ", expected " +
                      std::to_string(s.d));
  if (s.rotate != 0.0 && s.d < 2) throw ConfigError("rotation needs d >= 2");
  if (s.nuisance_std < 0.0 || s.blob_std < 0.0) throw ConfigError("negative spread");
}

Matrix blob_centers(const PairSpec& s, std::size_t informative) {
  Rng layout(s.layout_seed ^ (0x51ED2701ULL * static_cast<std::uint64_t>(s.k)) ^
             (0x2545F491ULL * informative));
  Matrix centers(static_cast<std::size_t>(s.k), informative);
  for (double& v : centers.data()) v = s.blob_radius * layout.normal();
  return centers;
}

}  // namespace

Dataset draw_source(const PairSpec& s, std::uint64_t seed) {
  check_spec(s);
  const std::size_t inf = informative_dims(s);
  Rng rng(seed);
  Matrix x(s.n, s.d);
  std::vector<int> y(s.n);
  int k = 2;
  Matrix centers;
  if (s.rule == LabelRule::blobs) {
    centers = blob_centers(s, inf);
    k = s.k;
  }
  constexpr double kPi = 3.14159265358979323846;
  for (std::size_t i = 0; i < s.n; ++i) {
    auto row = x.row(i);
    switch (s.rule) {
      case LabelRule::linear: {
        const double c = rng.sign() * 1.5;
        row[0] = c + 0.5 * rng.normal();
        for (std::size_t f = 1; f < inf; ++f) row[f] = 0.5 * rng.normal();
        y[i] = row[0] > 0.0 ? 1 : 0;
        break;
      }
      case LabelRule::xor_rule: {
        row[0] = rng.sign() * 1.5 + 0.5 * rng.normal();
        row[1] = rng.sign() * 1.5 + 0.5 * rng.normal();
        for (std::size_t f = 2; f < inf; ++f) row[f] = 0.5 * rng.normal();
        y[i] = ((row[0] > 0.0) != (row[1] > 0.0)) ? 1 : 0;
        break;
      }
      case LabelRule::moons: {
        const int label = static_cast<int>(i % 2);
        const double t = kPi * rng.uniform();
        double a = label == 0 ? std::cos(t) : 1.0 - std::cos(t);
        double b = label == 0 ? std::sin(t) : 0.5 - std::sin(t);
        row[0] = 1.5 * (a - 0.5) + 0.15 * rng.normal();
        row[1] = 1.5 * (b - 0.25) + 0.15 * rng.normal();
        for (std::size_t f = 2; f < inf; ++f) row[f] = 0.5 * rng.normal();
        y[i] = label;
        break;
      }
      case LabelRule::blobs: {
        const auto c = rng.below(static_cast<std::size_t>(s.k));
        for (std::size_t f = 0; f < inf; ++f) row[f] = centers(c, f) + s.blob_std * rng.normal();
        y[i] = static_cast<int>(c);
        break;
      }
    }
    for (std::size_t f = inf; f < s.d; ++f) row[f] = s.nuisance_std * rng.normal();
  }
  return make_dataset(std::move(x), std::move(y), k, "source");
}

std::pair<Dataset, Dataset> gen_gaussian_pair(const PairSpec& spec) {
  check_spec(spec);
  const Rng root(spec.seed);
  Dataset source = draw_source(spec, root.child(1).seed());
  Dataset target = draw_source(spec, root.child(2).seed());
  target.domain_tag = "target";
  const double c = std::cos(spec.rotate);
  const double s = std::sin(spec.rotate);
  for (std::size_t i = 0; i < target.size(); ++i) {
    auto row = target.x.row(i);
    if (spec.rotate != 0.0) {
      const double a = row[0];
      const double b = row[1];
      row[0] = c * a - s * b;
      row[1] = s * a + c * b;
    }
    if (!spec.shift.empty())
      for (std::size_t f = 0; f < spec.d; ++f) row[f] += spec.shift[f];
  }
  return {std::move(source), std::move(target)};
}

Dataset add_feature_noise(const Dataset& d, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ConfigError("noise sigma must be >= 0");
  Dataset out = d;
  if (sigma == 0.0) return out;
  Rng rng(seed);
  for (double& v : out.x.data()) v += sigma * rng.normal();
  return out;
}

// ---- IDX -------------------------------------------------------------------

namespace {

std::vector<unsigned char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

struct IdxPayload {
  std::vector<std::uint32_t> dims;
  std::size_t offset = 0;
};

IdxPayload parse_idx_header(const std::vector<unsigned char>& bytes, std::uint32_t magic,
                            const std::string& path) {
  if (bytes.size() < 4) throw FormatError("'" + path + "': truncated IDX header", bytes.size());
  if (be32(bytes, 0) != magic) {
    std::ostringstream msg;
    msg << "'" << path << "': bad IDX magic 0x" << std::hex << be32(bytes, 0) << ", expected 0x"
        << magic;
    throw FormatError(msg.str(), 0);
  }
  const std::size_t ndims = magic & 0xFFu;
  IdxPayload p;
  p.offset = 4 + 4 * ndims;
  if (bytes.size() < p.offset)
    throw FormatError("'" + path + "': truncated IDX dimensions", bytes.size());
  std::size_t total = 1;
  for (std::size_t i = 0; i < ndims; ++i) {
    p.dims.push_back(be32(bytes, 4 + 4 * i));
    total *= p.dims.back();
  }
  if (bytes.size() < p.offset + total)
    throw FormatError("'" + path + "': truncated IDX payload, expected " +
                          std::to_string(p.offset + total) + " bytes",
                      bytes.size());
  return p;
}

void put_be32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

}  // namespace

Dataset read_idx(const std::string& images_path, const std::optional<std::string>& labels_path) {
  const auto img = slurp(images_path);
  const auto hdr = parse_idx_header(img, 0x00000803u, images_path);
  const std::size_t n = hdr.dims[0];
  const std::size_t d = static_cast<std::size_t>(hdr.dims[1]) * hdr.dims[2];
  if (n == 0 || d == 0) throw FormatError("'" + images_path + "': empty IDX image set", 4);
  Matrix x(n, d);
  auto data = x.data();
  for (std::size_t i = 0; i < n * d; ++i) data[i] = img[hdr.offset + i] / 255.0;

  std::optional<std::vector<int>> y;
  int k = 2;
  if (labels_path) {
    const auto lab = slurp(*labels_path);
    const auto lh = parse_idx_header(lab, 0x00000801u, *labels_path);
    if (lh.dims[0] != n)
      throw FormatError("'" + *labels_path + "': label count " + std::to_string(lh.dims[0]) +
                            " does not match image count " + std::to_string(n),
                        4);
    std::vector<int> ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      ys[i] = lab[lh.offset + i];
      k = std::max(k, ys[i] + 1);
    }
    y = std::move(ys);
  }
  return make_dataset(std::move(x), std::move(y), k, images_path);
}

void write_idx(const Dataset& d, const std::string& images_path,
               const std::optional<std::string>& labels_path, std::size_t image_cols) {
  d.validate();
  const std::size_t cols = image_cols == 0 ? d.dim() : image_cols;
  if (d.dim() % cols != 0) throw ConfigError("image_cols does not divide the feature dimension");
  std::ofstream out(images_path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + images_path + "'");
  put_be32(out, 0x00000803u);
  put_be32(out, static_cast<std::uint32_t>(d.size()));
  put_be32(out, static_cast<std::uint32_t>(d.dim() / cols));
  put_be32(out, static_cast<std::uint32_t>(cols));
  for (double v : d.x.data()) {
    const double q = std::clamp(std::round(v * 255.0), 0.0, 255.0);
    out.put(static_cast<char>(static_cast<unsigned char>(q)));
  }
  if (labels_path) {
    const auto& ys = d.labels();
    std::ofstream lo(*labels_path, std::ios::binary);
    if (!lo) throw ConfigError("cannot write '" + *labels_path + "'");
    put_be32(lo, 0x00000801u);
    put_be32(lo, static_cast<std::uint32_t>(ys.size()));
    for (int v : ys) {
      if (v > 255) throw ConfigError("IDX labels must fit in one byte");
      lo.put(static_cast<char>(static_cast<unsigned char>(v)));
    }
  }
}

// ---- CSV -------------------------------------------------------------------

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? line.size() - start
                                                                      : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r'))
      f.remove_suffix(1);
  }
  return out;
}

double parse_double(std::string_view s, std::size_t offset) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end)
    throw FormatError("not a number: '" + std::string(s) + "'", offset);
  return v;
}

}  // namespace

Dataset read_csv(const std::string& path, const std::optional<std::string>& label_col,
                 std::size_t channels) {
  if (channels == 0) throw ConfigError("channels must be >= 1");
  const auto bytes = slurp(path);
  const std::string text(bytes.begin(), bytes.end());
  std::size_t pos = 0;
  auto next_line = [&](std::size_t& line_start) -> std::optional<std::string_view> {
    while (pos < text.size()) {
      line_start = pos;
      auto nl = text.find('\n', pos);
      if (nl == std::string::npos) nl = text.size();
      std::string_view line(text.data() + pos, nl - pos);
      pos = nl + 1;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!line.empty()) return line;
    }
    return std::nullopt;
  };

  std::size_t line_start = 0;
  const auto header_line = next_line(line_start);
  if (!header_line) throw FormatError("'" + path + "': missing CSV header", 0);
  const auto header = split_fields(*header_line);
  std::optional<std::size_t> label_idx;
  if (label_col) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == *label_col) label_idx = i;
    if (!label_idx)
      throw FormatError("'" + path + "': label column '" + *label_col + "' not in header", 0);
  }
  const std::size_t raw_features = header.size() - (label_idx ? 1 : 0);
  if (raw_features == 0 || raw_features % channels != 0)
    throw FormatError("'" + path + "': feature column count " + std::to_string(raw_features) +
                          " is not a positive multiple of channels",
                      0);
  const std::size_t d = raw_features / channels;

  std::vector<double> values;
  std::vector<int> labels;
  std::vector<double> raw(raw_features);
  std::size_t rows = 0;
  while (auto line = next_line(line_start)) {
    const auto fields = split_fields(*line);
    if (fields.size() != header.size())
      throw FormatError("'" + path + "': ragged row with " + std::to_string(fields.size()) +
                            " fields, header has " + std::to_string(header.size()),
                        line_start);
    std::size_t f = 0;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (label_idx && i == *label_idx) {
        const double lv = parse_double(fields[i], line_start);
        if (lv < 0 || lv != std::floor(lv))
          throw FormatError("'" + path + "': label is not a non-negative integer", line_start);
        labels.push_back(static_cast<int>(lv));
      } else {
        raw[f++] = parse_double(fields[i], line_start);
      }
    }
    for (std::size_t g = 0; g < d; ++g) {
      double s = 0.0;
      for (std::size_t c = 0; c < channels; ++c) s += raw[g * channels + c];
      values.push_back(s / static_cast<double>(channels));
    }
    ++rows;
  }
  if (rows == 0) throw FormatError("'" + path + "': no data rows", text.size());
  int k = 2;
  for (int v : labels) k = std::max(k, v + 1);
  std::optional<std::vector<int>> y;
  if (label_idx) y = std::move(labels);
  return make_dataset(Matrix(rows, d, std::move(values)), std::move(y), k, path);
}

void write_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  for (std::size_t f = 0; f < d.dim(); ++f) out << (f ? "," : "") << 'f' << f;
  if (d.labeled()) out << ",label";
  out << '\n';
  char buf[64];
  for (std::size_t r = 0; r < d.size(); ++r) {
    for (std::size_t f = 0; f < d.dim(); ++f) {
      auto [p, ec] = std::to_chars(buf, buf + sizeof buf, d.x(r, f));
      if (f) out << ',';
      out.write(buf, p - buf);
    }
    if (d.labeled()) out << ',' << (*d.y)[r];
    out << '\n';
  }
}

// ---- split -----------------------------------------------------------------

std::vector<std::vector<std::size_t>> split_indices(std::size_t n, const SplitSpec& spec) {
  if (spec.fractions.empty()) throw ConfigError("split needs at least one fraction");
  double total = 0.0;
  for (double f : spec.fractions) {
    if (!(f > 0.0)) throw ConfigError("split fractions must be positive");
    total += f;
  }
  if (total > 1.0 + 1e-12) throw ConfigError("split fractions sum above 1");

  const std::size_t m = spec.fractions.size();
  std::vector<std::size_t> sizes(m);
  std::vector<double> frac(m);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double exact = spec.fractions[i] * static_cast<double>(n);
    sizes[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    frac[i] = exact - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  const auto target = static_cast<std::size_t>(std::floor(total * static_cast<double>(n) + 1e-9));
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return frac[a] > frac[b]; });
  for (std::size_t i = 0; assigned < target && i < m; ++i, ++assigned) ++sizes[order[i]];
  for (std::size_t i = 0; i < m; ++i)
    if (sizes[i] == 0)
      throw ConfigError("split fraction " + std::to_string(spec.fractions[i]) +
                        " yields an empty subset for n=" + std::to_string(n));

  Rng rng(spec.seed);
  const auto perm = rng.permutation(n);
  std::vector<std::vector<std::size_t>> out(m);
  std::size_t at = 0;
  for (std::size_t i = 0; i < m; ++i) {
    out[i].assign(perm.begin() + static_cast<std::ptrdiff_t>(at),
                  perm.begin() + static_cast<std::ptrdiff_t>(at + sizes[i]));
    at += sizes[i];
  }
  return out;
}

std::vector<Dataset> split(const Dataset& d, const SplitSpec& spec) {
  std::vector<Dataset> out;
  for (const auto& idx : split_indices(d.size(), spec)) out.push_back(d.subset(idx));
  return out;
}

}  // namespace phd
