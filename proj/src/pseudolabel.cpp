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

#include "ssdl/pseudolabel.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "ssdl/error.hpp"

namespace ssdl {

void PropagationConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InputError("lambda must be positive");
}

LabelMatrix build_initial_labels(const PartialLabels& labels) {
  labels.validate();
  LabelMatrix o;
  o.kind = LabelKind::initial_o;
  o.values = Matrix::Constant(labels.num_classes, labels.size(), 0.5);
  for (Index j = 0; j < labels.size(); ++j) {
    if (!labels.is_labeled(j)) continue;
    o.values.col(j).setZero();
    o.values(labels.labels[static_cast<std::size_t>(j)], j) = 1.0;
  }
  return o;
}

Matrix propagation_gradient(const Matrix& f, const Matrix& o, const Matrix& regularizer,
                            double lambda) {
  return 2.0 * f * regularizer + 2.0 * lambda * (f - o);
}

LabelMatrix propagate(const LabelMatrix& o, const Matrix& regularizer,
                      const PropagationConfig& cfg, PropagationReport* report) {
  cfg.validate();
  const Index n = o.size();
  if (regularizer.rows() != n || regularizer.cols() != n)
    throw InputError("regularizer is " + std::to_string(regularizer.rows()) + "x" +
                     std::to_string(regularizer.cols()) + " but there are " +
                     std::to_string(n) + " samples");
  if (!regularizer.allFinite()) throw NumericalError("regularizer has non-finite entries");
  const double reg_scale = std::max(1.0, regularizer.cwiseAbs().maxCoeff());
  if ((regularizer - regularizer.transpose()).cwiseAbs().maxCoeff() > 1e-10 * reg_scale)
    throw InputError("regularizer is not symmetric");

  PropagationReport local;
  PropagationReport& rep = report != nullptr ? *report : local;
  rep = {};

  const Matrix system = Matrix::Identity(n, n) + regularizer / cfg.lambda;
  const double system_scale = system.cwiseAbs().maxCoeff();
  Eigen::LDLT<Matrix> ldlt(system);
  const Vector pivots = ldlt.vectorD();
  const bool suspect = ldlt.info() != Eigen::Success || !(pivots.array() > 0.0).all() ||
                       pivots.cwiseAbs().minCoeff() < 1e-12 * system_scale;
  if (suspect) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(system, Eigen::EigenvaluesOnly);
    rep.smallest_eigenvalue = eig.eigenvalues().minCoeff();
    if (rep.smallest_eigenvalue < -1e-8 * system_scale) {
      std::ostringstream os;
      os << "propagation system is indefinite (smallest eigenvalue " << rep.smallest_eigenvalue
         << ")";
      throw NumericalError(os.str());
    }
    if (rep.smallest_eigenvalue < 1e-12 * system_scale) {
      ldlt.compute(system + 1e-10 * Matrix::Identity(n, n));
      rep.ridge_added = true;
      std::ostringstream os;
      os << "propagation system is near singular (smallest eigenvalue "
         << rep.smallest_eigenvalue << "); added a 1e-10 ridge";
      rep.warnings.push_back(os.str());
    }
  }

  LabelMatrix f;
  f.kind = LabelKind::pseudo_f;
  f.values = ldlt.solve(o.values.transpose()).transpose();
  if (!f.values.allFinite()) throw NumericalError("propagation produced non-finite labels");

  rep.residual = (f.values * system - o.values).cwiseAbs().maxCoeff();
  const double o_max = o.values.size() > 0 ? o.values.cwiseAbs().maxCoeff() : 0.0;
  if (rep.residual > 1e-8 * std::max(o_max, 1e-300)) {
    std::ostringstream os;
    os << "propagation residual " << rep.residual << " exceeds tolerance";
    throw NumericalError(os.str());
  }
  return f;
}

double propagation_cross_entropy(const LabelMatrix& f, const PartialLabels& truth,
                                 const std::vector<Index>& columns) {
  if (columns.empty()) throw InputError("cross-entropy needs at least one selected column");
  if (truth.size() != f.size()) throw InputError("truth does not match the label matrix size");
  if (truth.num_classes != f.num_classes())
    throw InputError("truth class count does not match the label matrix");
  double total = 0.0;
  for (Index j : columns) {
    if (!truth.is_labeled(j))
      throw InputError("selected column " + std::to_string(j) + " has no ground truth");
    const auto col = f.values.col(j);
    const double top = col.maxCoeff();
    const double log_sum = std::log((col.array() - top).exp().sum());
    total += log_sum - (col(truth.labels[static_cast<std::size_t>(j)]) - top);
  }
  return total / static_cast<double>(columns.size());
}

double propagation_cross_entropy(const LabelMatrix& f, const PartialLabels& truth,
                                 const PartialLabels& observed, CrossEntropyMask mask) {
  if (observed.size() != truth.size())
    throw InputError("observed labels do not match the truth size");
  std::vector<Index> columns;
  for (Index j = 0; j < truth.size(); ++j) {
    if (!truth.is_labeled(j)) continue;
    if (mask == CrossEntropyMask::heldout_only && observed.is_labeled(j)) continue;
    columns.push_back(j);
  }
  return propagation_cross_entropy(f, truth, columns);
}

std::vector<int> column_argmax(const Matrix& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.cols()), 0);
  for (Index j = 0; j < scores.cols(); ++j) {
    int best = 0;
    for (Index c = 1; c < scores.rows(); ++c)
      if (scores(c, j) > scores(best, j)) best = static_cast<int>(c);
    out[static_cast<std::size_t>(j)] = best;
  }
  return out;
}

void write_pseudo_labels_csv(std::ostream& out, const LabelMatrix& f,
                             const std::vector<std::string>& sample_ids) {
  if (static_cast<Index>(sample_ids.size()) != f.size())
    throw InputError("sample id count does not match the label matrix");
  out << "class";
  for (const auto& id : sample_ids) out << ',' << id;
  out << '\n';
  for (Index c = 0; c < f.num_classes(); ++c) {
    out << c;
    for (Index j = 0; j < f.size(); ++j) {
      out << ',';
      write_double(out, f.values(c, j));
    }
    out << '\n';
  }
  out << "argmax";
  for (int a : column_argmax(f.values)) out << ',' << a;
  out << '\n';
}

LabelMatrix read_pseudo_labels_csv(std::istream& in, const std::string& source) {
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  std::string line;
  if (!std::getline(in, line) || line.rfind("class", 0) != 0)
    throw InputError(source + ": line 1: expected a 'class,<ids>' header");
  const auto n = static_cast<Index>(split(line).size()) - 1;
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.rfind("argmax", 0) == 0) continue;
    auto cells = split(line);
    if (static_cast<Index>(cells.size()) != n + 1)
      throw InputError(source + ": line " + std::to_string(lineno) + ": expected " +
                       std::to_string(n + 1) + " cells");
    std::vector<double> row;
    for (std::size_t c = 1; c < cells.size(); ++c)
      row.push_back(parse_double(cells[c], source + ": line " + std::to_string(lineno) +
                                               ", column " + std::to_string(c + 1)));
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw InputError(source + ": need at least 2 class rows");
  LabelMatrix f;
  f.kind = LabelKind::pseudo_f;
  f.values.resize(static_cast<Index>(rows.size()), n);
  for (std::size_t c = 0; c < rows.size(); ++c)
    for (Index j = 0; j < n; ++j) f.values(static_cast<Index>(c), j) = rows[c][static_cast<std::size_t>(j)];
  return f;
}

}  // namespace ssdl
