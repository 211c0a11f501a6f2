// Copyright 2026 The SSDL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ssdl/matrixio.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "ssdl/error.hpp"

namespace ssdl {

namespace {

std::string trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

[[noreturn]] void fail_at(const std::string& source, std::size_t line, std::size_t column,
                          const std::string& msg) {
  std::ostringstream os;
  os << source << ": line " << line;
  if (column > 0) os << ", column " << column;
  os << ": " << msg;
  throw InputError(os.str());
}

std::size_t parse_size(std::string_view text, const std::string& source, const char* what) {
  std::size_t value = 0;
  auto t = trim(text);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    fail_at(source, 1, 0, std::string("malformed header value for ") + what);
  return value;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(b.data(), 4);
}

void put_f64(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  out.write(b.data(), 8);
}

std::uint32_t get_u32(std::istream& in, const std::string& source) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4))
    throw InputError(source + ": truncated binary header");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in, const std::string& source) {
  std::array<unsigned char, 8> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 8))
    throw InputError(source + ": truncated binary payload");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

void read_magic(std::istream& in, std::string_view magic, const std::string& source) {
  std::string got(magic.size(), '\0');
  if (!in.read(got.data(), static_cast<std::streamsize>(got.size())) || got != magic)
    throw InputError(source + ": bad magic, expected " + std::string(magic));
}

std::uint32_t checked_u32(Index v, const char* what) {
  if (v < 0 || v > static_cast<Index>(UINT32_MAX))
    throw InputError(std::string(what) + " does not fit in u32");
  return static_cast<std::uint32_t>(v);
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = {}) {
  std::ifstream in(path, std::ios::in | mode);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = {}) {
  std::ofstream out(path, std::ios::out | std::ios::trunc | mode);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// FeatureMatrix / PartialLabels

FeatureMatrix FeatureMatrix::with_default_ids(Matrix data) {
  FeatureMatrix x;
  x.sample_ids.reserve(static_cast<std::size_t>(data.cols()));
  for (Index j = 0; j < data.cols(); ++j) x.sample_ids.push_back("s" + std::to_string(j));
  x.data = std::move(data);
  return x;
}

void FeatureMatrix::validate() const {
  if (dim() < 1) throw InputError("feature matrix needs dim >= 1");
  if (size() < 2) throw InputError("feature matrix needs at least 2 samples");
  if (static_cast<Index>(sample_ids.size()) != size())
    throw InputError("sample id count " + std::to_string(sample_ids.size()) +
                     " does not match column count " + std::to_string(size()));
  for (Index j = 0; j < size(); ++j)
    for (Index i = 0; i < dim(); ++i)
      if (!std::isfinite(data(i, j)))
        throw InputError("non-finite feature at row " + std::to_string(i) + ", column " +
                         std::to_string(j));
  std::unordered_set<std::string> seen;
  for (const auto& id : sample_ids)
    if (!seen.insert(id).second) throw InputError("duplicate sample id '" + id + "'");
}

FeatureMatrix FeatureMatrix::select(const std::vector<Index>& columns) const {
  FeatureMatrix out;
  out.data.resize(dim(), static_cast<Index>(columns.size()));
  out.sample_ids.reserve(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out.data.col(static_cast<Index>(c)) = data.col(columns[c]);
    out.sample_ids.push_back(sample_ids[static_cast<std::size_t>(columns[c])]);
  }
  return out;
}

Index PartialLabels::num_labeled() const {
  return static_cast<Index>(
      std::count_if(labels.begin(), labels.end(), [](int l) { return l != kUnlabeled; }));
}

double PartialLabels::label_rate() const {
  if (labels.empty()) return 0.0;
  return static_cast<double>(num_labeled()) / static_cast<double>(labels.size());
}

void PartialLabels::validate() const {
  if (num_classes < 2) throw InputError("need at least 2 classes");
  for (std::size_t j = 0; j < labels.size(); ++j) {
    int l = labels[j];
    if (l != kUnlabeled && (l < 0 || l >= num_classes))
      throw InputError("label " + std::to_string(l) + " at sample " + std::to_string(j) +
                       " is outside [0, " + std::to_string(num_classes) + ")");
  }
}

void PartialLabels::require_all_classes() const {
  std::vector<bool> present(static_cast<std::size_t>(num_classes), false);
  for (int l : labels)
    if (l != kUnlabeled) present[static_cast<std::size_t>(l)] = true;
  for (int c = 0; c < num_classes; ++c)
    if (!present[static_cast<std::size_t>(c)])
      throw InputError("class " + std::to_string(c) + " has no labeled sample");
}

PartialLabels PartialLabels::select(const std::vector<Index>& columns) const {
  PartialLabels out;
  out.num_classes = num_classes;
  out.labels.reserve(columns.size());
  for (Index c : columns) out.labels.push_back(labels[static_cast<std::size_t>(c)]);
  return out;
}

// ---------------------------------------------------------------------------
// Formats

FileFormat parse_file_format(std::string_view name) {
  if (name == "csv") return FileFormat::csv;
  if (name == "binary" || name == "bin") return FileFormat::binary;
  throw InputError("unknown format '" + std::string(name) + "' (csv or binary)");
}

std::string_view format_name(FileFormat format) {
  return format == FileFormat::csv ? "csv" : "binary";
}

FeatureMatrix read_features_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) fail_at(source, 1, 0, "empty file");
  std::string header = trim(line);
  if (!header.empty() && header.front() == '#') header = trim(header.substr(1));
  auto fields = split_commas(header);
  if (fields.size() != 2 || trim(fields[0]).rfind("dim=", 0) != 0 ||
      trim(fields[1]).rfind("n=", 0) != 0)
    fail_at(source, 1, 0, "malformed header, expected '# dim=<d>,n=<n>'");
  const auto dim = parse_size(trim(fields[0]).substr(4), source, "dim");
  const auto n = parse_size(trim(fields[1]).substr(2), source, "n");

  FeatureMatrix x;
  if (!std::getline(in, line)) fail_at(source, 2, 0, "missing sample id line");
  for (auto id : split_commas(line)) x.sample_ids.push_back(trim(id));
  if (x.sample_ids.size() != n)
    fail_at(source, 2, 0,
            "expected " + std::to_string(n) + " sample ids, found " +
                std::to_string(x.sample_ids.size()));
  std::unordered_set<std::string> seen;
  for (std::size_t j = 0; j < n; ++j)
    if (!seen.insert(x.sample_ids[j]).second)
      fail_at(source, 2, j + 1, "duplicate sample id '" + x.sample_ids[j] + "'");

  x.data.resize(static_cast<Index>(dim), static_cast<Index>(n));
  for (std::size_t r = 0; r < dim; ++r) {
    const std::size_t lineno = r + 3;
    if (!std::getline(in, line)) fail_at(source, lineno, 0, "missing data row");
    auto cells = split_commas(line);
    if (cells.size() != n)
      fail_at(source, lineno, 0,
              "expected " + std::to_string(n) + " values, found " + std::to_string(cells.size()));
    for (std::size_t c = 0; c < n; ++c) {
      std::string cell = trim(cells[c]);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
        fail_at(source, lineno, c + 1, "non-numeric value '" + cell + "'");
      if (!std::isfinite(v)) fail_at(source, lineno, c + 1, "non-finite value '" + cell + "'");
      x.data(static_cast<Index>(r), static_cast<Index>(c)) = v;
    }
  }
  while (std::getline(in, line))
    if (!trim(line).empty()) fail_at(source, dim + 3, 0, "unexpected trailing data");
  x.validate();
  return x;
}

void write_double(std::ostream& out, double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.write(buf.data(), ptr - buf.data());
}

double parse_double(std::string_view text, const std::string& where) {
  std::string cell = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
    throw InputError(where + ": non-numeric value '" + cell + "'");
  if (!std::isfinite(v)) throw InputError(where + ": non-finite value '" + cell + "'");
  return v;
}

void write_features_csv(std::ostream& out, const FeatureMatrix& x) {
  for (const auto& id : x.sample_ids)
    if (id.find_first_of(",\n\r") != std::string::npos)
      throw InputError("sample id '" + id + "' cannot be written to CSV");
  out << "# dim=" << x.dim() << ",n=" << x.size() << '\n';
  for (std::size_t j = 0; j < x.sample_ids.size(); ++j)
    out << (j ? "," : "") << x.sample_ids[j];
  out << '\n';
  for (Index i = 0; i < x.dim(); ++i) {
    for (Index j = 0; j < x.size(); ++j) {
      if (j) out << ',';
      write_double(out, x.data(i, j));
    }
    out << '\n';
  }
}

void write_binary_matrix(std::ostream& out, std::string_view magic, const Matrix& m) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
  put_u32(out, checked_u32(m.rows(), "row count"));
  put_u32(out, checked_u32(m.cols(), "column count"));
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) put_f64(out, m(i, j));
}

Matrix read_binary_matrix(std::istream& in, std::string_view magic, const std::string& source) {
  read_magic(in, magic, source);
  const auto rows = get_u32(in, source);
  const auto cols = get_u32(in, source);
  Matrix m(rows, cols);
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) m(i, j) = get_f64(in, source);
  return m;
}

FeatureMatrix load_features(const std::filesystem::path& path, FileFormat format) {
  if (format == FileFormat::csv) {
    auto in = open_in(path);
    return read_features_csv(in, path.string());
  }
  auto in = open_in(path, std::ios::binary);
  auto x = FeatureMatrix::with_default_ids(read_binary_matrix(in, kFeatureMagic, path.string()));
  for (Index j = 0; j < x.size(); ++j)
    for (Index i = 0; i < x.dim(); ++i)
      if (!std::isfinite(x.data(i, j)))
        throw InputError(path.string() + ": non-finite value at row " + std::to_string(i) +
                         ", column " + std::to_string(j));
  x.validate();
  return x;
}

void save_features(const FeatureMatrix& x, const std::filesystem::path& path, FileFormat format) {
  if (format == FileFormat::csv) {
    auto out = open_out(path);
    write_features_csv(out, x);
    return;
  }
  auto out = open_out(path, std::ios::binary);
  write_binary_matrix(out, kFeatureMagic, x.data);
}

PartialLabels load_labels(const std::filesystem::path& path, int num_classes) {
  auto in = open_in(path);
  PartialLabels out;
  out.num_classes = num_classes;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty()) continue;
    int v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size())
      fail_at(path.string(), lineno, 0, "not an integer label: '" + t + "'");
    if (v != kUnlabeled && (v < 0 || v >= num_classes))
      fail_at(path.string(), lineno, 0,
              "label " + std::to_string(v) + " is outside [0, " + std::to_string(num_classes) +
                  ") and is not -1");
    out.labels.push_back(v);
  }
  out.validate();
  return out;
}

void save_labels(const PartialLabels& labels, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (int l : labels.labels) out << l << '\n';
}

void check_label_count(const PartialLabels& labels, const FeatureMatrix& x) {
  if (labels.size() != x.size())
    throw InputError("label count " + std::to_string(labels.size()) +
                     " does not match sample count " + std::to_string(x.size()));
}

void normalize_columns(FeatureMatrix& x) {
  for (Index j = 0; j < x.size(); ++j) {
    const double n = x.data.col(j).norm();
    if (n > 0.0) x.data.col(j) /= n;
  }
}

void save_model_file(const std::filesystem::path& path, const Matrix& dictionary,
                     const Matrix& classifier) {
  if (dictionary.cols() != classifier.cols())
    throw InputError("dictionary and classifier disagree on atom count");
  auto out = open_out(path, std::ios::binary);
  out.write(kModelMagic.data(), static_cast<std::streamsize>(kModelMagic.size()));
  put_u32(out, checked_u32(dictionary.rows(), "dim"));
  put_u32(out, checked_u32(dictionary.cols(), "K"));
  put_u32(out, checked_u32(classifier.rows(), "C"));
  for (Index j = 0; j < dictionary.cols(); ++j)
    for (Index i = 0; i < dictionary.rows(); ++i) put_f64(out, dictionary(i, j));
  for (Index j = 0; j < classifier.cols(); ++j)
    for (Index i = 0; i < classifier.rows(); ++i) put_f64(out, classifier(i, j));
  if (!out) throw InputError("failed writing " + path.string());
}

std::pair<Matrix, Matrix> load_model_file(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  const auto source = path.string();
  read_magic(in, kModelMagic, source);
  const auto dim = get_u32(in, source);
  const auto k = get_u32(in, source);
  const auto c = get_u32(in, source);
  Matrix d(dim, k), b(c, k);
  for (Index j = 0; j < d.cols(); ++j)
    for (Index i = 0; i < d.rows(); ++i) d(i, j) = get_f64(in, source);
  for (Index j = 0; j < b.cols(); ++j)
    for (Index i = 0; i < b.rows(); ++i) b(i, j) = get_f64(in, source);
  if (!d.allFinite() || !b.allFinite()) throw InputError(source + ": non-finite model entry");
  return {std::move(d), std::move(b)};
}

// ---------------------------------------------------------------------------
// Synthetic data and splits

void SyntheticSpec::validate() const {
  if (num_classes < 2) throw InputError("synthetic spec needs at least 2 classes");
  if (samples_per_class < 1) throw InputError("synthetic spec needs samples_per_class >= 1");
  if (num_classes * samples_per_class < 2) throw InputError("synthetic spec needs N >= 2");
  if (dim < 1) throw InputError("synthetic spec needs dim >= 1");
  if (!(cluster_spread >= 0.0) || !std::isfinite(cluster_spread))
    throw InputError("cluster_spread must be finite and nonnegative");
}

SyntheticData make_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix centers(spec.dim, spec.num_classes);
  for (Index c = 0; c < centers.cols(); ++c)
    for (Index i = 0; i < centers.rows(); ++i) centers(i, c) = 10.0 * unit(rng);

  const Index n = static_cast<Index>(spec.num_classes) * spec.samples_per_class;
  SyntheticData out;
  out.features = FeatureMatrix::with_default_ids(Matrix(spec.dim, n));
  out.truth.num_classes = spec.num_classes;
  out.truth.labels.reserve(static_cast<std::size_t>(n));
  std::normal_distribution<double> noise(0.0, 1.0);
  Index j = 0;
  for (int c = 0; c < spec.num_classes; ++c) {
    for (int s = 0; s < spec.samples_per_class; ++s, ++j) {
      for (Index i = 0; i < spec.dim; ++i) {
        double v = centers(i, c);
        if (spec.cluster_spread > 0.0) v += spec.cluster_spread * noise(rng);
        out.features.data(i, j) = v;
      }
      out.truth.labels.push_back(c);
    }
  }
  return out;
}

namespace {

std::vector<std::vector<Index>> members_by_class(const PartialLabels& y) {
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(y.num_classes));
  for (Index j = 0; j < y.size(); ++j)
    if (y.is_labeled(j)) members[static_cast<std::size_t>(y.labels[static_cast<std::size_t>(j)])].push_back(j);
  return members;
}

}  // namespace

PartialLabels mask_labels(const PartialLabels& truth, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw InputError("label rate must lie in [0, 1]");
  truth.validate();
  PartialLabels out = truth;
  std::fill(out.labels.begin(), out.labels.end(), kUnlabeled);
  std::mt19937_64 rng(seed);
  for (auto& members : members_by_class(truth)) {
    if (members.empty()) continue;
    std::shuffle(members.begin(), members.end(), rng);
    auto keep = static_cast<std::size_t>(std::lround(rate * static_cast<double>(members.size())));
    if (rate > 0.0) keep = std::max<std::size_t>(keep, 1);
    keep = std::min(keep, members.size());
    for (std::size_t i = 0; i < keep; ++i)
      out.labels[static_cast<std::size_t>(members[i])] = truth.labels[static_cast<std::size_t>(members[i])];
  }
  return out;
}

TrainTestSplit split_train_test(const FeatureMatrix& x, const PartialLabels& truth,
                                double train_fraction, std::uint64_t seed) {
  check_label_count(truth, x);
  if (!(train_fraction > 0.0 && train_fraction <= 1.0))
    throw InputError("train fraction must lie in (0, 1]");
  std::mt19937_64 rng(seed);
  TrainTestSplit s;
  for (auto& members : members_by_class(truth)) {
    std::shuffle(members.begin(), members.end(), rng);
    auto n_train =
        static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(members.size())));
    n_train = std::min(n_train, members.size());
    s.train_columns.insert(s.train_columns.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test_columns.insert(s.test_columns.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
  }
  std::sort(s.train_columns.begin(), s.train_columns.end());
  std::sort(s.test_columns.begin(), s.test_columns.end());
  s.train_x = x.select(s.train_columns);
  s.test_x = x.select(s.test_columns);
  s.train_y = truth.select(s.train_columns);
  s.test_y = truth.select(s.test_columns);
  return s;
}

}  // namespace ssdl
