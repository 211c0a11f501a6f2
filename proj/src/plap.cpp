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

#include "ssdl/plap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "ssdl/error.hpp"

namespace ssdl {

namespace {

struct WeightedPair {
  Index i, j;
  double w;
};

std::vector<WeightedPair> upper_pairs(const Matrix& w) {
  std::vector<WeightedPair> pairs;
  for (Index j = 1; j < w.cols(); ++j)
    for (Index i = 0; i < j; ++i)
      if (w(i, j) != 0.0) pairs.push_back({i, j, w(i, j)});
  return pairs;
}

// |x|^(p-1) and |x|^p from a single pow call.
struct PowerPair {
  double pm1, p;
};

inline PowerPair abs_powers(double x, double p) {
  const double a = std::abs(x);
  if (p == 2.0) return {a, a * a};
  if (a == 0.0) return {0.0, 0.0};
  const double pm1 = std::pow(a, p - 1.0);
  return {pm1, pm1 * a};
}

struct ColumnTerms {
  double numerator = 0.0;    // sum over ordered pairs
  double denominator = 0.0;  // ||q||_p^p
};

ColumnTerms column_terms(const std::vector<WeightedPair>& pairs, const Matrix& q, Index m,
                         double p) {
  ColumnTerms t;
  for (const auto& e : pairs) t.numerator += e.w * abs_powers(q(e.i, m) - q(e.j, m), p).p;
  t.numerator *= 2.0;
  for (Index i = 0; i < q.rows(); ++i) t.denominator += abs_powers(q(i, m), p).p;
  return t;
}

double objective_from_pairs(const std::vector<WeightedPair>& pairs, const Matrix& q, double p) {
  double f = 0.0;
  for (Index m = 0; m < q.cols(); ++m) {
    const auto t = column_terms(pairs, q, m, p);
    if (!(t.denominator > 0.0)) return std::numeric_limits<double>::infinity();
    f += t.numerator / t.denominator;
  }
  return f;
}

Matrix gradient_from_pairs(const std::vector<WeightedPair>& pairs, const Matrix& q, double p) {
  Matrix g(q.rows(), q.cols());
  Vector acc(q.rows());
  for (Index m = 0; m < q.cols(); ++m) {
    acc.setZero();
    double numerator = 0.0;
    for (const auto& e : pairs) {
      const double d = q(e.i, m) - q(e.j, m);
      const auto pw = abs_powers(d, p);
      const double t = e.w * std::copysign(pw.pm1, d);
      acc(e.i) += t;
      acc(e.j) -= t;
      numerator += e.w * pw.p;
    }
    numerator *= 2.0;
    double denominator = 0.0;
    for (Index i = 0; i < q.rows(); ++i) denominator += abs_powers(q(i, m), p).p;
    const double quotient = numerator / denominator;
    for (Index i = 0; i < q.rows(); ++i) {
      const double phi = phi_p(q(i, m), p);
      g(i, m) = (p / denominator) * (2.0 * acc(i) - quotient * phi);
    }
  }
  return g;
}

double orth_drift(const Matrix& q) {
  const Index m = q.cols();
  return (q.transpose() * q - Matrix::Identity(m, m)).cwiseAbs().maxCoeff();
}

void apply_sign_convention(Matrix& q) {
  for (Index m = 0; m < q.cols(); ++m) {
    Index arg = 0;
    q.col(m).cwiseAbs().maxCoeff(&arg);
    if (q(arg, m) < 0.0) q.col(m) = -q.col(m);
  }
}

// Dv^-1/2 H M De^-1 H^T Dv^-1/2 for a diagonal or dense edge operator M.
Matrix normalized_sandwich(const Hypergraph& h, const Vector* diag_op, const Matrix* dense_op) {
  const auto deg = degree_matrices(h);
  const Vector dv_isqrt = deg.vertex.diagonal().cwiseSqrt().cwiseInverse();
  const Vector de_inv = deg.edge.diagonal().cwiseInverse();
  const Matrix left = dv_isqrt.asDiagonal() * h.incidence();
  const Matrix right = de_inv.asDiagonal() * left.transpose();
  if (diag_op != nullptr) return left * diag_op->asDiagonal() * right;
  return left * (*dense_op) * right;
}

Matrix identity_minus_symmetrized(const Matrix& propagation) {
  const Index n = propagation.rows();
  Matrix out = Matrix::Identity(n, n) - propagation;
  return 0.5 * (out + out.transpose()).eval();
}

}  // namespace

// ---------------------------------------------------------------------------

Matrix laplacian_regularizer(const Hypergraph& h) {
  return identity_minus_symmetrized(normalized_sandwich(h, &h.edge_weights(), nullptr));
}

void EdgeGraph::validate() const {
  if (weights.rows() != weights.cols() || weights.rows() < 1)
    throw InputError("edge graph must be a non-empty square matrix");
  for (Index j = 0; j < weights.cols(); ++j) {
    if (weights(j, j) != 0.0) throw InputError("edge graph has a nonzero diagonal entry");
    for (Index i = 0; i < j; ++i) {
      const double w = weights(i, j);
      if (!std::isfinite(w) || w < 0.0)
        throw InputError("edge graph entries must be finite and nonnegative");
      if (w != weights(j, i)) throw InputError("edge graph is not symmetric");
    }
  }
}

EdgeGraph edge_affinity(const Hypergraph& h) {
  const auto& inc = h.incidence();
  EdgeGraph g;
  g.weights = inc.transpose() * inc;
  // mirror the upper triangle so symmetry holds bit for bit
  for (Index j = 0; j < g.weights.cols(); ++j) {
    g.weights(j, j) = 0.0;
    for (Index i = 0; i < j; ++i) g.weights(j, i) = g.weights(i, j);
  }
  return g;
}

void PLapConfig::validate() const {
  if (!(p >= 1.1 && p <= 3.0)) throw InputError("p must lie in [1.1, 3.0]");
  if (m_dims < 0) throw InputError("m_dims must be >= 0");
  if (!(step_beta > 0.0)) throw InputError("step_beta must be positive");
  if (max_iter < 0) throw InputError("max_iter must be >= 0");
  if (!(grad_tol >= 0.0)) throw InputError("grad_tol must be nonnegative");
  if (reorthonormalize_every < 1) throw InputError("reorthonormalize_every must be >= 1");
  if (max_halvings < 0) throw InputError("max_halvings must be >= 0");
}

PLapConfig PLapConfig::preset(std::string_view name) {
  PLapConfig cfg;
  if (name == "stanford40") {
    cfg.p = 1.8;
  } else if (name == "uiuc-se") {
    cfg.p = 2.2;
  } else {
    throw InputError("unknown p preset '" + std::string(name) + "'");
  }
  return cfg;
}

double phi_p(double x, double p) {
  if (x == 0.0) return 0.0;
  return std::copysign(p == 2.0 ? std::abs(x) : std::pow(std::abs(x), p - 1.0), x);
}

double plap_objective(const Matrix& w, const Matrix& q, double p) {
  return objective_from_pairs(upper_pairs(w), q, p);
}

Vector plap_eigenvalues(const Matrix& w, const Matrix& q, double p) {
  const auto pairs = upper_pairs(w);
  Vector lambda(q.cols());
  for (Index m = 0; m < q.cols(); ++m) {
    const auto t = column_terms(pairs, q, m, p);
    lambda(m) = t.numerator / t.denominator;
  }
  return lambda;
}

Matrix plap_gradient(const Matrix& w, const Matrix& q, double p) {
  return gradient_from_pairs(upper_pairs(w), q, p);
}

Matrix orthonormalize(const Matrix& q) {
  Eigen::HouseholderQR<Matrix> qr(q);
  Matrix out = qr.householderQ() * Matrix::Identity(q.rows(), q.cols());
  apply_sign_convention(out);
  return out;
}

PLapEmbedding plap_embedding(const EdgeGraph& g, const PLapConfig& cfg) {
  cfg.validate();
  g.validate();
  const Index n = g.size();
  const Index m = cfg.m_dims == 0 ? n : cfg.m_dims;
  if (m > n)
    throw InputError("m_dims (" + std::to_string(m) + ") exceeds the hyperedge count (" +
                     std::to_string(n) + ")");

  PLapEmbedding emb;
  emb.p = cfg.p;
  emb.m_dims = m;

  // Work on w / max(w): iterates are then independent of the weight scale.
  const double scale = g.weights.maxCoeff();
  const Matrix w = scale > 0.0 ? Matrix(g.weights / scale) : g.weights;
  const auto pairs = upper_pairs(w);

  const Vector degree = w.rowwise().sum();
  const Matrix laplacian = Matrix(degree.asDiagonal()) - w;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(laplacian);
  if (eig.info() != Eigen::Success) throw NumericalError("spectral initialization failed");
  Matrix q = eig.eigenvectors().leftCols(m);
  apply_sign_convention(q);

  double f = objective_from_pairs(pairs, q, cfg.p);
  emb.initial_objective = f * scale;
  double beta = cfg.step_beta;

  for (int it = 1; it <= cfg.max_iter && !pairs.empty(); ++it) {
    const Matrix grad = gradient_from_pairs(pairs, q, cfg.p);
    for (Index c = 0; c < grad.cols(); ++c)
      for (Index r = 0; r < grad.rows(); ++r)
        if (!std::isfinite(grad(r, c)))
          throw NumericalError("non-finite p-Laplacian gradient at iteration " +
                               std::to_string(it) + ", column " + std::to_string(c));
    const Matrix direction = grad - q * grad.transpose() * q;

    // On reorthonormalization steps the QR result is the candidate, so the
    // backtracking also covers the (small) change QR makes to f1.
    const bool reorth = it % cfg.reorthonormalize_every == 0;
    bool accepted = false;
    Matrix candidate;
    double f_candidate = f;
    for (int halving = 0; halving <= cfg.max_halvings; ++halving) {
      candidate = q - beta * direction;
      if (reorth) candidate = orthonormalize(candidate);
      f_candidate = objective_from_pairs(pairs, candidate, cfg.p);
      if (f_candidate <= f) {
        accepted = true;
        break;
      }
      if (halving < cfg.max_halvings) beta *= 0.5;
    }
    if (!accepted) {
      emb.converged = true;
      break;
    }
    const double decrease = (f - f_candidate) / std::max(std::abs(f), 1e-300);
    q = std::move(candidate);
    f = f_candidate;
    emb.iterations = it;
    emb.diagnostics.push_back({it, f * scale, orth_drift(q), beta});
    if (decrease < cfg.grad_tol) {
      emb.converged = true;
      break;
    }
  }
  if (pairs.empty()) emb.converged = true;

  emb.q = orthonormalize(q);
  emb.lambda = scale > 0.0 ? Vector(plap_eigenvalues(w, emb.q, cfg.p) * scale)
                           : Vector(Vector::Zero(m));
  emb.objective = emb.lambda.sum();
  return emb;
}

Matrix attention_weights(const PLapEmbedding& emb) {
  const Index n = emb.q.rows();
  const double max_lambda = emb.lambda.size() > 0 ? emb.lambda.maxCoeff() : 0.0;
  const Vector scaled = max_lambda > 1.0 ? Vector(emb.lambda / max_lambda) : emb.lambda;
  return Matrix::Identity(n, n) - emb.q * scaled.asDiagonal() * emb.q.transpose();
}

Matrix plap_regularizer(const Hypergraph& h, const PLapEmbedding& emb) {
  if (emb.q.rows() != h.num_edges())
    throw InputError("embedding has " + std::to_string(emb.q.rows()) +
                     " rows but the hypergraph has " + std::to_string(h.num_edges()) +
                     " hyperedges");
  if (emb.lambda.size() != emb.q.cols())
    throw InputError("embedding eigenvalue count does not match its column count");
  if (emb.lambda.size() == 0 || (emb.lambda.array() == 0.0).all())
    return plap_regularizer_without_attention(h);
  const Matrix attention = attention_weights(emb);
  return identity_minus_symmetrized(normalized_sandwich(h, nullptr, &attention));
}

Matrix plap_regularizer_without_attention(const Hypergraph& h) {
  const Vector ones = Vector::Ones(h.num_edges());
  return identity_minus_symmetrized(normalized_sandwich(h, &ones, nullptr));
}

void write_plap_diagnostics(std::ostream& out, const PLapEmbedding& emb) {
  out << "iteration,objective,orth_drift,beta\n";
  const auto old_precision = out.precision(17);
  for (const auto& d : emb.diagnostics)
    out << d.iteration << ',' << d.objective << ',' << d.orth_drift << ',' << d.beta << '\n';
  out.precision(old_precision);
}

}  // namespace ssdl
