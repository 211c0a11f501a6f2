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

#ifndef SSDL_PSEUDOLABEL_HPP
#define SSDL_PSEUDOLABEL_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "ssdl/matrixio.hpp"

namespace ssdl {

enum class LabelKind { initial_o, pseudo_f };

/// C x N class-score matrix.
struct LabelMatrix {
  Matrix values;
  LabelKind kind = LabelKind::initial_o;

  Index num_classes() const { return values.rows(); }
  Index size() const { return values.cols(); }
};

struct PropagationConfig {
  double lambda = 0.1;

  void validate() const;
};

/// Labeled columns one-hot, unlabeled columns filled with 0.5.
LabelMatrix build_initial_labels(const PartialLabels& labels);

struct PropagationReport {
  bool ridge_added = false;
  double smallest_eigenvalue = 0.0;  // only computed when the factorization is suspect
  double residual = 0.0;             // max |F (I + reg/lambda) - O|
  std::vector<std::string> warnings;
};

/// F = O (I + reg / lambda)^-1, the minimizer of
/// tr(reg F^T F) + lambda ||F - O||_F^2, via a symmetric factorization.
LabelMatrix propagate(const LabelMatrix& o, const Matrix& regularizer,
                      const PropagationConfig& cfg, PropagationReport* report = nullptr);

/// 2 F reg + 2 lambda (F - O): the gradient of the propagation objective.
Matrix propagation_gradient(const Matrix& f, const Matrix& o, const Matrix& regularizer,
                            double lambda);

enum class CrossEntropyMask {
  heldout_only,  // labeled in truth, unlabeled in the propagation input
  all_labeled,   // labeled in truth
};

/// Column-wise softmax, then the mean of -log p(true class) over the
/// selected columns. Throws InputError when no column is selected.
double propagation_cross_entropy(const LabelMatrix& f, const PartialLabels& truth,
                                 const PartialLabels& observed, CrossEntropyMask mask);
double propagation_cross_entropy(const LabelMatrix& f, const PartialLabels& truth,
                                 const std::vector<Index>& columns);

/// Row index of each column's maximum; ties go to the lowest index.
std::vector<int> column_argmax(const Matrix& scores);

/// Header "class,<ids>", one row per class, then an "argmax" row.
void write_pseudo_labels_csv(std::ostream& out, const LabelMatrix& f,
                             const std::vector<std::string>& sample_ids);
LabelMatrix read_pseudo_labels_csv(std::istream& in, const std::string& source = "<stream>");

}  // namespace ssdl

#endif  // SSDL_PSEUDOLABEL_HPP
