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

#ifndef SSDL_MATRIXIO_HPP
#define SSDL_MATRIXIO_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace ssdl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Marker for an unlabeled sample in label files and PartialLabels.
inline constexpr int kUnlabeled = -1;

/// Dense sample matrix, one column per sample.
struct FeatureMatrix {
  Matrix data;  // dim x N
  std::vector<std::string> sample_ids;

  Index dim() const { return data.rows(); }
  Index size() const { return data.cols(); }

  /// Wraps a matrix, naming the columns s0, s1, ...
  static FeatureMatrix with_default_ids(Matrix data);

  /// Throws InputError unless dim >= 1, N >= 2, all values are finite and
  /// the ids are unique and aligned with the columns.
  void validate() const;

  /// Copy holding only the given columns, in the given order.
  FeatureMatrix select(const std::vector<Index>& columns) const;
};

struct PartialLabels {
  std::vector<int> labels;  // kUnlabeled or a class index in [0, num_classes)
  int num_classes = 0;

  Index size() const { return static_cast<Index>(labels.size()); }
  bool is_labeled(Index j) const { return labels[static_cast<std::size_t>(j)] != kUnlabeled; }
  Index num_labeled() const;
  double label_rate() const;

  void validate() const;
  /// Throws InputError if some class has no labeled sample.
  void require_all_classes() const;

  PartialLabels select(const std::vector<Index>& columns) const;
};

enum class FileFormat { csv, binary };

FileFormat parse_file_format(std::string_view name);
std::string_view format_name(FileFormat format);

FeatureMatrix read_features_csv(std::istream& in, const std::string& source = "<stream>");
void write_features_csv(std::ostream& out, const FeatureMatrix& x);

/// Shortest decimal text that reads back to the same double.
void write_double(std::ostream& out, double v);
double parse_double(std::string_view text, const std::string& where);

FeatureMatrix load_features(const std::filesystem::path& path, FileFormat format);
void save_features(const FeatureMatrix& x, const std::filesystem::path& path,
                   FileFormat format);

PartialLabels load_labels(const std::filesystem::path& path, int num_classes);
void save_labels(const PartialLabels& labels, const std::filesystem::path& path);

/// Throws InputError when the label vector does not cover every column of x.
void check_label_count(const PartialLabels& labels, const FeatureMatrix& x);

/// Scales every column to unit l2 norm; all-zero columns are left as is.
void normalize_columns(FeatureMatrix& x);

// Little-endian binary blocks: 8 magic bytes, u32 rows, u32 cols, then
// rows*cols float64 values in column-major order.
void write_binary_matrix(std::ostream& out, std::string_view magic, const Matrix& m);
Matrix read_binary_matrix(std::istream& in, std::string_view magic,
                          const std::string& source = "<stream>");

inline constexpr std::string_view kFeatureMagic = "SSDLMAT1";
inline constexpr std::string_view kModelMagic = "SSDLMOD1";
inline constexpr std::string_view kHypergraphMagic = "SSDLHGR1";

/// Model file: magic, u32 dim, u32 K, u32 C, then D (dim x K) and B (C x K),
/// both float64 column-major.
void save_model_file(const std::filesystem::path& path, const Matrix& dictionary,
                     const Matrix& classifier);
std::pair<Matrix, Matrix> load_model_file(const std::filesystem::path& path);

struct SyntheticSpec {
  int num_classes = 3;
  int samples_per_class = 40;
  int dim = 10;
  double cluster_spread = 0.3;
  std::uint64_t seed = 42;

  void validate() const;
};

struct SyntheticData {
  FeatureMatrix features;
  PartialLabels truth;  // fully labeled
};

/// Gaussian blobs with one center per class drawn from [0, 10)^dim.
/// A pure function of the spec.
SyntheticData make_synthetic(const SyntheticSpec& spec);

/// Keeps round(rate * n_c) labels per class (at least one when rate > 0),
/// chosen by seed; the rest become kUnlabeled.
PartialLabels mask_labels(const PartialLabels& truth, double rate, std::uint64_t seed);

struct TrainTestSplit {
  FeatureMatrix train_x, test_x;
  PartialLabels train_y, test_y;
  std::vector<Index> train_columns, test_columns;
};

/// Per-class split; train_fraction of each class (rounded) goes to train.
TrainTestSplit split_train_test(const FeatureMatrix& x, const PartialLabels& truth,
                                double train_fraction, std::uint64_t seed);

}  // namespace ssdl

#endif  // SSDL_MATRIXIO_HPP
