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

#include "ssdl/hypergraph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "ssdl/error.hpp"

namespace ssdl {

Hypergraph Hypergraph::from_incidence(Matrix incidence, Vector edge_weights,
                                      std::vector<Index> centroids, double sigma) {
  if (incidence.rows() < 1 || incidence.cols() < 1)
    throw InputError("incidence matrix must be non-empty");
  if (edge_weights.size() != incidence.cols())
    throw InputError("edge weight count does not match hyperedge count");
  if (!centroids.empty() && static_cast<Index>(centroids.size()) != incidence.cols())
    throw InputError("centroid count does not match hyperedge count");
  for (Index e = 0; e < incidence.cols(); ++e) {
    if (!(edge_weights(e) > 0.0) || !std::isfinite(edge_weights(e)))
      throw InputError("hyperedge " + std::to_string(e) + " has a non-positive weight");
    for (Index v = 0; v < incidence.rows(); ++v) {
      const double h = incidence(v, e);
      if (!(h >= 0.0 && h <= 1.0))
        throw InputError("incidence entry (" + std::to_string(v) + ", " + std::to_string(e) +
                         ") is outside [0, 1]");
    }
  }
  Hypergraph g;
  g.edge_degrees_ = incidence.colwise().sum().transpose();
  g.vertex_degrees_ = incidence * edge_weights;
  g.incidence_ = std::move(incidence);
  g.edge_weights_ = std::move(edge_weights);
  g.centroids_ = std::move(centroids);
  g.sigma_ = sigma;
  return g;
}

double median_pairwise_distance(const Matrix& x) {
  const Index n = x.cols();
  if (n < 2) throw InputError("median distance needs at least 2 samples");
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index j = 1; j < n; ++j)
    for (Index i = 0; i < j; ++i) dist.push_back((x.col(i) - x.col(j)).norm());
  const auto mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid), dist.end());
  double upper = dist[mid];
  if (dist.size() % 2 == 1) return upper;
  double lower = *std::max_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

Hypergraph build_hypergraph(const FeatureMatrix& x, const HypergraphConfig& cfg) {
  const Index n = x.size();
  if (n < 2) throw InputError("hypergraph needs at least 2 samples");
  if (cfg.k_neighbors < 1) throw InputError("k_neighbors must be >= 1");
  if (cfg.k_neighbors >= n)
    throw InputError("k_neighbors (" + std::to_string(cfg.k_neighbors) +
                     ") must be smaller than the sample count (" + std::to_string(n) + ")");
  if (!(cfg.initial_edge_weight > 0.0)) throw InputError("initial_edge_weight must be positive");

  double sigma = cfg.bandwidth.value;
  if (cfg.bandwidth.mode == Bandwidth::Mode::median_pairwise) {
    sigma = median_pairwise_distance(x.data);
    if (!(sigma > 0.0))
      throw NumericalError(
          "median pairwise distance is 0 (duplicate points); use a fixed bandwidth");
  } else if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw InputError("fixed bandwidth must be positive and finite");
  }
  const double inv_sigma2 = 1.0 / (sigma * sigma);
  const auto k = static_cast<std::size_t>(cfg.k_neighbors);

  Matrix h = Matrix::Zero(n, n);
  std::vector<Index> centroids(static_cast<std::size_t>(n));
  std::vector<double> d2(static_cast<std::size_t>(n));
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index e = 0; e < n; ++e) {
    for (Index v = 0; v < n; ++v)
      d2[static_cast<std::size_t>(v)] = (x.data.col(v) - x.data.col(e)).squaredNorm();
    std::iota(order.begin(), order.end(), Index{0});
    // the centroid always sorts first: exclude it and rank the rest
    std::swap(order[0], order[static_cast<std::size_t>(e)]);
    auto by_distance = [&](Index a, Index b) {
      const double da = d2[static_cast<std::size_t>(a)], db = d2[static_cast<std::size_t>(b)];
      return da < db || (da == db && a < b);
    };
    std::partial_sort(order.begin() + 1, order.begin() + 1 + static_cast<std::ptrdiff_t>(k),
                      order.end(), by_distance);
    centroids[static_cast<std::size_t>(e)] = e;
    h(e, e) = 1.0;
    for (std::size_t r = 1; r <= k; ++r) {
      const Index v = order[r];
      const double w = std::exp(-d2[static_cast<std::size_t>(v)] * inv_sigma2);
      if (!(w > 0.0))
        throw NumericalError("incidence weight of vertex " + std::to_string(v) +
                             " in hyperedge " + std::to_string(e) +
                             " underflows to 0; increase the bandwidth");
      h(v, e) = w;
    }
  }
  Vector weights = Vector::Constant(n, cfg.initial_edge_weight);
  return Hypergraph::from_incidence(std::move(h), std::move(weights), std::move(centroids), sigma);
}

DegreeMatrices degree_matrices(const Hypergraph& h) {
  const auto& dv = h.vertex_degrees();
  const auto& de = h.edge_degrees();
  for (Index e = 0; e < de.size(); ++e)
    if (!(de(e) > 0.0))
      throw InputError("hyperedge " + std::to_string(e) + " has zero degree (empty hyperedge)");
  for (Index v = 0; v < dv.size(); ++v)
    if (!(dv(v) > 0.0))
      throw InputError("vertex " + std::to_string(v) + " has zero degree (isolated vertex)");

  const Vector de_check = h.incidence().colwise().sum().transpose();
  const Vector dv_check = h.incidence() * h.edge_weights();
  if ((de_check - de).cwiseAbs().maxCoeff() > 1e-12 ||
      (dv_check - dv).cwiseAbs().maxCoeff() > 1e-12)
    throw InvariantError("stored hypergraph degrees disagree with H and W");

  DegreeMatrices out;
  out.vertex = dv.asDiagonal();
  out.edge = de.asDiagonal();
  return out;
}

void save_incidence(const Hypergraph& h, const std::filesystem::path& path, FileFormat format) {
  if (format == FileFormat::csv) {
    save_features(FeatureMatrix::with_default_ids(h.incidence()), path, FileFormat::csv);
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  write_binary_matrix(out, kHypergraphMagic, h.incidence());
}

}  // namespace ssdl
