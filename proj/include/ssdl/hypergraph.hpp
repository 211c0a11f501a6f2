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

#ifndef SSDL_HYPERGRAPH_HPP
#define SSDL_HYPERGRAPH_HPP

#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "ssdl/matrixio.hpp"

namespace ssdl {

struct Bandwidth {
  enum class Mode { median_pairwise, fixed };
  Mode mode = Mode::median_pairwise;
  double value = 1.0;  // only read in fixed mode

  static Bandwidth median() { return {}; }
  static Bandwidth fixed(double sigma) { return {Mode::fixed, sigma}; }
};

struct HypergraphConfig {
  int k_neighbors = 10;  // clamped to N - 1 by build_hypergraph
  Bandwidth bandwidth;
  double initial_edge_weight = 1.0;
};

/*
  Weighted hypergraph over N vertices.

  incidence      H, |V| x |E|, H(v,e) in [0,1]
  edge_weights   W, diagonal of the hyperedge weight matrix
  edge_degrees   delta(e) = sum_v H(v,e)
  vertex_degrees d(v)     = sum_e W(e) H(v,e)

  Degrees are computed once at construction and stored.
*/
class Hypergraph {
 public:
  /// Checks shape, finiteness, H in [0,1] and W > 0, then derives degrees.
  /// Zero degrees are allowed here and rejected by degree_matrices().
  static Hypergraph from_incidence(Matrix incidence, Vector edge_weights,
                                   std::vector<Index> centroids = {}, double sigma = 0.0);

  const Matrix& incidence() const { return incidence_; }
  const Vector& edge_weights() const { return edge_weights_; }
  const Vector& vertex_degrees() const { return vertex_degrees_; }
  const Vector& edge_degrees() const { return edge_degrees_; }
  /// Centroid vertex of each hyperedge; empty for hand-built hypergraphs.
  const std::vector<Index>& centroids() const { return centroids_; }
  /// Bandwidth used for the Gaussian incidence weights (0 if unknown).
  double sigma() const { return sigma_; }

  Index num_vertices() const { return incidence_.rows(); }
  Index num_edges() const { return incidence_.cols(); }

 private:
  Matrix incidence_;
  Vector edge_weights_;
  Vector vertex_degrees_;
  Vector edge_degrees_;
  std::vector<Index> centroids_;
  double sigma_ = 0.0;
};

/// Median over all i < j of the Euclidean distance between columns i and j.
double median_pairwise_distance(const Matrix& x);

/// One hyperedge per sample: the sample plus its k nearest neighbours
/// (Euclidean, ties to the lower index), H(v,e) = exp(-dis(v,v_c)^2 / sigma^2).
Hypergraph build_hypergraph(const FeatureMatrix& x, const HypergraphConfig& cfg);

struct DegreeMatrices {
  Eigen::DiagonalMatrix<double, Eigen::Dynamic> vertex;  // D_v
  Eigen::DiagonalMatrix<double, Eigen::Dynamic> edge;    // D_e
};

/// Throws InputError naming the first vertex or hyperedge with zero degree,
/// InvariantError if the stored degrees drift from H and W by more than 1e-12.
DegreeMatrices degree_matrices(const Hypergraph& h);

/// Dumps H in the feature-matrix layout (CSV) or as an SSDLHGR1 binary block.
void save_incidence(const Hypergraph& h, const std::filesystem::path& path, FileFormat format);

}  // namespace ssdl

#endif  // SSDL_HYPERGRAPH_HPP
