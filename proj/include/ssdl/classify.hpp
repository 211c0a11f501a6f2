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

#ifndef SSDL_CLASSIFY_HPP
#define SSDL_CLASSIFY_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "ssdl/dictlearn.hpp"

namespace ssdl {

struct EncodeConfig {
  double alpha = 0x1p-12;
  double tol = 1e-12;      // relative objective decrease per sweep
  int max_sweeps = 100000;
};

/// Lasso codes of each column of x over the model dictionary,
/// min ||x - D s||^2 + 2 alpha ||s||_1, by cyclic coordinate descent.
Matrix encode(const DictionaryModel& model, const Matrix& x, const EncodeConfig& cfg);

struct Prediction {
  Matrix scores;            // C x N, B * S
  std::vector<int> labels;  // argmax per column, lowest class on ties
  Matrix codes;             // K x N
};

Prediction predict(const DictionaryModel& model, const Matrix& x, const EncodeConfig& cfg);

/// Fraction of evaluated columns whose prediction matches the truth;
/// unlabeled truth columns are skipped. Throws InputError when none remain.
double accuracy(const Prediction& pred, const PartialLabels& truth);
double accuracy(const std::vector<int>& predicted, const PartialLabels& truth);

/// CSV columns: sample_id, predicted, score_0 ... score_{C-1}.
void write_predictions_csv(std::ostream& out, const Prediction& pred,
                           const std::vector<std::string>& sample_ids);

}  // namespace ssdl

#endif  // SSDL_CLASSIFY_HPP
