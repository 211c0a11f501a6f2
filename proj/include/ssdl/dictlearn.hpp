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

#ifndef SSDL_DICTLEARN_HPP
#define SSDL_DICTLEARN_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <vector>

#include "ssdl/matrixio.hpp"

namespace ssdl {

/*
  Label-embedded dictionary learning.

  Minimizes
      ||X - D S||_F^2 + 2 alpha ||S||_1 + gamma ||F - B S||_F^2
  subject to unit-norm columns of D and B, by cycling through
      codes S       exact coordinate descent (soft threshold per entry)
      dictionary D  column-wise block update, renormalized
      classifier B  column-wise block update, renormalized
  Each step minimizes its block, so the objective never increases.
*/

struct TrainConfig {
  Index k_atoms = 0;           // 0 selects ceil(N / 2)
  double alpha = 0x1p-12;
  double gamma = 0x1p-12;
  int max_outer = 50;
  double obj_tol = 1e-5;       // relative objective decrease
  int inner_sweeps = 1;
  std::uint64_t seed = 0;
  bool allow_replacement = false;  // permit K > N when drawing initial atoms

  Index resolve_atoms(Index num_samples) const;
  void validate() const;
};

struct DictionaryModel {
  Matrix dictionary;  // D, dim x K
  Matrix classifier;  // B, C x K
  Matrix codes;       // S, K x N

  Index dim() const { return dictionary.rows(); }
  Index atoms() const { return dictionary.cols(); }
  Index classes() const { return classifier.rows(); }
};

struct ObjectiveTerms {
  double reconstruction = 0.0;  // ||X - DS||^2
  double sparsity = 0.0;        // 2 alpha ||S||_1
  double label = 0.0;           // gamma ||F - BS||^2
  double total = 0.0;
};

ObjectiveTerms objective_terms(const DictionaryModel& model, const Matrix& x, const Matrix& f,
                               double alpha, double gamma);
double objective(const DictionaryModel& model, const Matrix& x, const Matrix& f,
                 const TrainConfig& cfg);

/// sign(j) max(|j| - alpha, 0)
double soft_threshold(double j, double alpha);

/// Minimizer of denom s^2 - 2 j s + 2 alpha |s|.
inline double coordinate_minimizer(double j, double alpha, double denom) {
  return soft_threshold(j, alpha) / denom;
}

/// D columns are K distinct samples picked by seed and normalized, B columns
/// are normalized Gaussian draws, S = 0.
DictionaryModel init_model(const Matrix& x, const Matrix& f, const TrainConfig& cfg);

/// cfg.inner_sweeps coordinate sweeps over S, atoms outer and samples inner.
/// Throws NumericalError naming the atom whose diagonal term is not positive.
void update_codes(DictionaryModel& model, const Matrix& x, const Matrix& f,
                  const TrainConfig& cfg);

/// Column-wise dictionary update. Atoms with an all-zero code row or a zero
/// update direction keep their value; their indices are returned.
std::vector<Index> update_dictionary(DictionaryModel& model, const Matrix& x);

/// Same block update applied to the classifier against F.
std::vector<Index> update_classifier(DictionaryModel& model, const Matrix& f);

struct TraceRow {
  int iteration = 0;  // 0 is the initial model
  ObjectiveTerms terms;
  double nonzero_fraction = 0.0;
};

struct TrainTrace {
  std::vector<TraceRow> rows;
  std::vector<Index> unused_atoms;  // flagged by the final dictionary update
  bool converged = false;
};

struct TrainResult {
  DictionaryModel model;
  TrainTrace trace;
};

/// Called after every outer iteration with the row just appended.
using TraceObserver = std::function<void(const TraceRow&)>;

/// Alternates code, dictionary and classifier updates until the relative
/// decrease drops below obj_tol or max_outer is reached. Throws
/// InvariantError if any block update raises the objective.
TrainResult train(const Matrix& x, const Matrix& f, const TrainConfig& cfg,
                  const TraceObserver& observer = {});

/// CSV columns: iteration, total, reconstruction, l1, label, nonzero_fraction.
void write_trace_csv(std::ostream& out, const TrainTrace& trace);

void save_model(const DictionaryModel& model, const std::filesystem::path& path);
/// Loads D and B; codes are left empty.
DictionaryModel load_model(const std::filesystem::path& path);

}  // namespace ssdl

#endif  // SSDL_DICTLEARN_HPP
