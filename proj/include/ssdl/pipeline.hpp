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

#ifndef SSDL_PIPELINE_HPP
#define SSDL_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ssdl/classify.hpp"
#include "ssdl/dictlearn.hpp"
#include "ssdl/hypergraph.hpp"
#include "ssdl/plap.hpp"
#include "ssdl/pseudolabel.hpp"

namespace ssdl {

inline constexpr std::string_view kVersion = "1.0.0";

/// Flat run configuration. Every key has a default; see kRunConfigKeys.
struct RunConfig {
  // hypergraph
  int k_neighbors = 10;
  std::string bandwidth = "median";  // median | fixed
  double sigma = 1.0;
  double edge_weight = 1.0;
  bool normalize = false;  // per-sample l2 normalization of the features
  // p-Laplacian embedding
  double p = 2.2;
  Index m_dims = 0;
  double step_beta = 1e-2;
  int plap_max_iter = 500;
  double grad_tol = 1e-6;
  int reorth_every = 10;
  bool lp_zero = false;  // drop the attention term (plain hypergraph Laplacian)
  // propagation
  double lambda = 0.1;
  // dictionary learning
  bool standardize_supervision = true;  // center and unit-scale supervision columns
  Index k_atoms = 0;
  double alpha = 0x1p-12;
  double gamma = 0x1p-12;
  int max_outer = 50;
  double obj_tol = 1e-5;
  int inner_sweeps = 1;
  // inference
  double test_alpha = -1.0;  // negative: reuse alpha
  double encode_tol = 1e-12;
  int encode_max_sweeps = 100000;
  // data handling
  int classes = 0;  // 0: infer as max label + 1
  double label_rate = 0.4;
  double train_fraction = 0.7;
  std::string format = "csv";
  std::uint64_t seed = 42;

  /// Throws InputError for an unknown key or an unparsable value.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
  void validate() const;

  HypergraphConfig hypergraph_config(Index num_samples) const;
  PLapConfig plap_config() const;
  PropagationConfig propagation_config() const;
  TrainConfig train_config() const;
  EncodeConfig encode_config() const;
};

extern const std::vector<std::string_view> kRunConfigKeys;

/// Reads key=value lines; '#' starts a comment.
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});
void read_run_config(std::istream& in, RunConfig& cfg, const std::string& source);
void write_run_config(std::ostream& out, const RunConfig& cfg);

/// Hypergraph, embedding and regularizer: everything that depends on the
/// features only, so one instance serves any number of label masks.
struct PretextModel {
  Hypergraph graph;
  PLapEmbedding embedding;
  Matrix regularizer;
  int k_neighbors_used = 0;
};

PretextModel build_pretext(const FeatureMatrix& x, const RunConfig& cfg);

struct PseudoLabels {
  LabelMatrix initial;
  LabelMatrix pseudo;
  PropagationReport report;
};

PseudoLabels generate_pseudo_labels(const PretextModel& pretext, const PartialLabels& labels,
                                    const RunConfig& cfg);

enum class Supervision {
  pseudo,   // propagated F
  initial,  // O as is, unlabeled columns 0.5
};

/// Supervision matrix as handed to the dictionary learner. With
/// cfg.standardize_supervision each column loses its mean over classes (a
/// shift the column softmax ignores) and is scaled to unit l2 norm, the
/// scale of the normalized features. Argmax is preserved; all-constant
/// columns become zero.
Matrix prepare_supervision(Matrix f, const RunConfig& cfg);

/// Trains the dictionary on x against the chosen supervision matrix.
TrainResult train_ssdl(const FeatureMatrix& x, const PseudoLabels& labels,
                       const RunConfig& cfg, Supervision supervision = Supervision::pseudo);

/// Nearest class mean of the labeled training columns; baseline only.
std::vector<int> nearest_centroid(const FeatureMatrix& train, const PartialLabels& labels,
                                  const FeatureMatrix& test);

enum class SweepKind { label_rate, p, lambda, alpha_gamma };

SweepKind parse_sweep_kind(std::string_view name);
std::string_view sweep_kind_name(SweepKind kind);

struct SweepRow {
  double param1 = 0.0;
  double param2 = 0.0;  // second axis of alpha_gamma; unused otherwise
  std::string metric;   // "accuracy" or "cross_entropy"
  double value = 0.0;
  std::string error;    // empty on success
};

/*
  Parameter sweeps over one training set.

  label_rate   mask the truth at each rate, train, accuracy on the test set
  p, lambda    mask at cfg.label_rate, propagate, cross-entropy on the
               masked-out training columns
  alpha_gamma  grid x grid2 (grid2 defaults to grid), accuracy on the test set

  A failing cell becomes a row carrying the error; the sweep continues.
  Rows follow grid order.
*/
std::vector<SweepRow> run_sweep(SweepKind kind, const std::vector<double>& grid,
                                const std::vector<double>& grid2, const FeatureMatrix& train_x,
                                const PartialLabels& train_truth, const FeatureMatrix* test_x,
                                const PartialLabels* test_truth, const RunConfig& cfg);

/// CSV columns: kind, param1, param2, metric, value, status.
void write_sweep_csv(std::ostream& out, SweepKind kind, const std::vector<SweepRow>& rows);

/// Resolves cfg.classes against a label file, inferring it when 0.
PartialLabels load_labels_for(const std::filesystem::path& path, const RunConfig& cfg);

/// key=value run record: command, inputs, full config echo and extras.
void write_run_metadata(const std::filesystem::path& path, std::string_view command,
                        const RunConfig& cfg,
                        const std::vector<std::pair<std::string, std::string>>& extras);

}  // namespace ssdl

#endif  // SSDL_PIPELINE_HPP
