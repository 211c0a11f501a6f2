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

#ifndef SSDL_PLAP_HPP
#define SSDL_PLAP_HPP

#include <iosfwd>
#include <string_view>
#include <vector>

#include "ssdl/hypergraph.hpp"

namespace ssdl {

/// Normalized hypergraph Laplacian I - Dv^-1/2 H W De^-1 H^T Dv^-1/2.
Matrix laplacian_regularizer(const Hypergraph& h);

/// Pairwise hyperedge affinities: symmetric, nonnegative, zero diagonal.
struct EdgeGraph {
  Matrix weights;

  Index size() const { return weights.rows(); }
  /// Throws InputError unless square, exactly symmetric, nonnegative,
  /// finite, with a zero diagonal.
  void validate() const;
};

/// w = H^T H with the diagonal zeroed.
EdgeGraph edge_affinity(const Hypergraph& h);

struct PLapConfig {
  double p = 2.0;                 // in [1.1, 3.0]
  Index m_dims = 0;               // 0 selects the full spectrum
  double step_beta = 1e-2;
  int max_iter = 500;
  double grad_tol = 1e-6;         // relative objective decrease
  int reorthonormalize_every = 10;
  int max_halvings = 30;

  void validate() const;

  /// Named p presets: "stanford40" (p = 1.8) and "uiuc-se" (p = 2.2).
  static PLapConfig preset(std::string_view name);
};

struct PLapIteration {
  int iteration = 0;
  double objective = 0.0;
  double orth_drift = 0.0;  // max |Q^T Q - I|
  double beta = 0.0;
};

struct PLapEmbedding {
  Matrix q;        // |E| x M, orthonormal columns
  Vector lambda;   // per-column p-eigenvalue
  double p = 2.0;
  Index m_dims = 0;
  double objective = 0.0;          // f1 at q, on the caller's weight scale
  double initial_objective = 0.0;  // f1 at the spectral initialization
  bool converged = false;
  int iterations = 0;
  std::vector<PLapIteration> diagnostics;
};

/// |x|^(p-1) sign(x)
double phi_p(double x, double p);

/// f1(Q) = sum_m sum_ij w_ij |q_i^m - q_j^m|^p / ||q^m||_p^p
double plap_objective(const Matrix& w, const Matrix& q, double p);

/// Per-column quotient of plap_objective.
Vector plap_eigenvalues(const Matrix& w, const Matrix& q, double p);

/// Exact gradient of plap_objective with respect to Q.
Matrix plap_gradient(const Matrix& w, const Matrix& q, double p);

/// Orthonormalizes columns by QR, then flips each column so its
/// largest-magnitude entry is positive.
Matrix orthonormalize(const Matrix& q);

/// Spectral warm start from the combinatorial Laplacian of g, then
/// projected gradient descent with backtracking on the step length.
/// Throws NumericalError on a non-finite gradient.
PLapEmbedding plap_embedding(const EdgeGraph& g, const PLapConfig& cfg);

/// I_e - Q diag(Lambda / max(1, max Lambda)) Q^T
Matrix attention_weights(const PLapEmbedding& emb);

/// I - Dv^-1/2 H (I_e - L_p) De^-1 H^T Dv^-1/2, symmetrized.
Matrix plap_regularizer(const Hypergraph& h, const PLapEmbedding& emb);

/// Same operator with L_p = 0.
Matrix plap_regularizer_without_attention(const Hypergraph& h);

/// CSV columns: iteration, objective, orth_drift, beta.
void write_plap_diagnostics(std::ostream& out, const PLapEmbedding& emb);

}  // namespace ssdl

#endif  // SSDL_PLAP_HPP
