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

#include "ssdl/classify.hpp"

#include <cmath>
#include <ostream>

#include "ssdl/error.hpp"
#include "ssdl/pseudolabel.hpp"

namespace ssdl {

Matrix encode(const DictionaryModel& model, const Matrix& x, const EncodeConfig& cfg) {
  if (x.rows() != model.dim())
    throw InputError("test data has dimension " + std::to_string(x.rows()) +
                     " but the dictionary expects " + std::to_string(model.dim()));
  if (!(cfg.alpha >= 0.0)) throw InputError("alpha must be >= 0");
  const Matrix& d = model.dictionary;
  const Index k = d.cols();
  const Matrix gram = d.transpose() * d;
  for (Index a = 0; a < k; ++a)
    if (!(gram(a, a) > 0.0)) throw NumericalError("atom " + std::to_string(a) + " is zero");
  const Matrix rhs = d.transpose() * x;

  Matrix codes = Matrix::Zero(k, x.cols());
  Vector s(k), c(k);
  for (Index n = 0; n < x.cols(); ++n) {
    // c = D^T x - G s, kept current so one coordinate step costs O(1)
    // unless the coordinate moves.
    s.setZero();
    c = rhs.col(n);
    const double x_norm2 = x.col(n).squaredNorm();
    double current = x_norm2;
    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
      for (Index a = 0; a < k; ++a) {
        const double j = c(a) + gram(a, a) * s(a);
        const double next = coordinate_minimizer(j, cfg.alpha, gram(a, a));
        const double step = next - s(a);
        if (step != 0.0) {
          c.noalias() -= step * gram.col(a);
          s(a) = next;
        }
      }
      // ||x - D s||^2 = ||x||^2 - s^T (D^T x) - s^T c
      const double next = x_norm2 - s.dot(rhs.col(n)) - s.dot(c) +
                          2.0 * cfg.alpha * s.cwiseAbs().sum();
      const double decrease = (current - next) / std::max(std::abs(current), 1e-300);
      current = next;
      if (decrease < cfg.tol) break;
    }
    codes.col(n) = s;
  }
  return codes;
}

Prediction predict(const DictionaryModel& model, const Matrix& x, const EncodeConfig& cfg) {
  Prediction p;
  p.codes = encode(model, x, cfg);
  p.scores = model.classifier * p.codes;
  p.labels = column_argmax(p.scores);
  return p;
}

double accuracy(const std::vector<int>& predicted, const PartialLabels& truth) {
  if (static_cast<Index>(predicted.size()) != truth.size())
    throw InputError("prediction count does not match the truth count");
  Index evaluated = 0, correct = 0;
  for (Index j = 0; j < truth.size(); ++j) {
    if (!truth.is_labeled(j)) continue;
    ++evaluated;
    if (predicted[static_cast<std::size_t>(j)] == truth.labels[static_cast<std::size_t>(j)])
      ++correct;
  }
  if (evaluated == 0) throw InputError("accuracy needs at least one labeled sample");
  return static_cast<double>(correct) / static_cast<double>(evaluated);
}

double accuracy(const Prediction& pred, const PartialLabels& truth) {
  return accuracy(pred.labels, truth);
}

void write_predictions_csv(std::ostream& out, const Prediction& pred,
                           const std::vector<std::string>& sample_ids) {
  if (static_cast<Index>(sample_ids.size()) != pred.scores.cols())
    throw InputError("sample id count does not match the prediction count");
  out << "sample_id,predicted";
  for (Index c = 0; c < pred.scores.rows(); ++c) out << ",score_" << c;
  out << '\n';
  for (Index j = 0; j < pred.scores.cols(); ++j) {
    out << sample_ids[static_cast<std::size_t>(j)] << ',' << pred.labels[static_cast<std::size_t>(j)];
    for (Index c = 0; c < pred.scores.rows(); ++c) {
      out << ',';
      write_double(out, pred.scores(c, j));
    }
    out << '\n';
  }
}

}  // namespace ssdl
