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


#include <doctest.h>

#include <cmath>
#include <sstream>

#include <Eigen/SVD>

#include "ssdl/error.hpp"
#include "ssdl/plap.hpp"
#include "support.hpp"

using namespace ssdl;
using ssdl::testing::jacobi_eigen;
using ssdl::testing::random_edge_weights;
using ssdl::testing::random_matrix;

namespace {

Hypergraph random_hypergraph(Index n, int k, std::uint64_t seed) {
  HypergraphConfig cfg;
  cfg.k_neighbors = k;
  return build_hypergraph(FeatureMatrix::with_default_ids(random_matrix(3, n, seed)), cfg);
}

Matrix combinatorial_laplacian(const Matrix& w) {
  return Matrix(w.rowwise().sum().asDiagonal()) - w;
}

// Brute-force f1: ordered pairs, plain loops.
double f1_oracle(const Matrix& w, const Matrix& q, double p) {
  double f = 0.0;
  for (Index m = 0; m < q.cols(); ++m) {
    double num = 0.0, den = 0.0;
    for (Index i = 0; i < w.rows(); ++i) {
      den += std::pow(std::abs(q(i, m)), p);
      for (Index j = 0; j < w.cols(); ++j) num += w(i, j) * std::pow(std::abs(q(i, m) - q(j, m)), p);
    }
    f += num / den;
  }
  return f;
}

double max_principal_angle(const Matrix& a, const Matrix& b) {
  Eigen::JacobiSVD<Matrix> svd(a.transpose() * b);
  const double smallest = std::min(1.0, svd.singularValues().minCoeff());
  return std::acos(smallest);
}

}  // namespace

TEST_CASE("laplacian of two vertices in one hyperedge") {
  const auto h = Hypergraph::from_incidence(Matrix::Ones(2, 1), Vector::Ones(1));
  Matrix expect(2, 2);
  expect << 0.5, -0.5, -0.5, 0.5;
  CHECK((laplacian_regularizer(h) - expect).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("laplacian is symmetric PSD with spectrum in [0, 2]") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto h = random_hypergraph(30, 4, seed);
    const Matrix l = laplacian_regularizer(h);
    CHECK((l - l.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    for (std::uint64_t t = 0; t < 100; ++t) {
      const Vector x = random_matrix(30, 1, 1000 * seed + t);
      CHECK(x.dot(l * x) >= -1e-10);
    }
    const auto [values, vectors] = jacobi_eigen(l);
    CHECK(values.minCoeff() >= -1e-8);
    CHECK(values.maxCoeff() <= 2.0 + 1e-8);
  }
}

TEST_CASE("edge affinity") {
  Matrix inc(3, 2);
  inc << 1, 0, 1, 1, 0, 1;
  const auto g = edge_affinity(Hypergraph::from_incidence(inc, Vector::Ones(2)));
  CHECK(g.weights(0, 1) == 1.0);
  CHECK(g.weights(1, 0) == 1.0);
  CHECK(g.weights(0, 0) == 0.0);

  Matrix disjoint(4, 2);
  disjoint << 1, 0, 1, 0, 0, 1, 0, 1;
  CHECK(edge_affinity(Hypergraph::from_incidence(disjoint, Vector::Ones(2))).weights.isZero());

  Matrix same(3, 2);
  same << 0.5, 0.5, 1, 1, 0.25, 0.25;
  const auto gs = edge_affinity(Hypergraph::from_incidence(same, Vector::Ones(2)));
  CHECK(gs.weights(0, 1) == doctest::Approx(same.col(0).squaredNorm()));

  const auto gr = edge_affinity(random_hypergraph(25, 5, 8));
  CHECK(gr.weights == gr.weights.transpose());
  CHECK_NOTHROW(gr.validate());
}

TEST_CASE("edge graph validation") {
  EdgeGraph g{Matrix::Zero(2, 2)};
  g.weights(0, 1) = 1.0;
  CHECK_THROWS_AS(g.validate(), InputError);
  g.weights(1, 0) = 1.0;
  CHECK_NOTHROW(g.validate());
  g.weights(0, 0) = 1.0;
  CHECK_THROWS_AS(g.validate(), InputError);
}

TEST_CASE("phi_p") {
  CHECK(phi_p(-3.0, 2.0) == -3.0);
  CHECK(phi_p(3.0, 2.0) == 3.0);
  CHECK(phi_p(0.0, 1.5) == 0.0);
  CHECK(phi_p(-4.0, 1.5) == doctest::Approx(-2.0));
}

TEST_CASE("objective and eigenvalues against the brute-force sum") {
  const Matrix w = random_edge_weights(9, 3);
  const Matrix q = random_matrix(9, 4, 4);
  for (double p : {1.3, 2.0, 2.7}) {
    CHECK(plap_objective(w, q, p) == doctest::Approx(f1_oracle(w, q, p)).epsilon(1e-12));
    CHECK(plap_eigenvalues(w, q, p).sum() ==
          doctest::Approx(f1_oracle(w, q, p)).epsilon(1e-12));
  }
}

TEST_CASE("gradient matches central differences") {
  const Matrix w = random_edge_weights(8, 12);
  const Matrix q = random_matrix(8, 3, 13);
  for (double p : {1.5, 2.0, 2.2, 3.0}) {
    const Matrix g = plap_gradient(w, q, p);
    const double h = 1e-6;
    for (Index m = 0; m < q.cols(); ++m) {
      for (Index i = 0; i < q.rows(); ++i) {
        Matrix plus = q, minus = q;
        plus(i, m) += h;
        minus(i, m) -= h;
        const double fd = (f1_oracle(w, plus, p) - f1_oracle(w, minus, p)) / (2 * h);
        CHECK(g(i, m) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
      }
    }
  }
}

TEST_CASE("p = 2 reproduces the spectral optimum") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Index n = 6 + static_cast<Index>(seed);
    const Matrix w = random_edge_weights(n, 100 + seed);
    const auto [values, vectors] = jacobi_eigen(combinatorial_laplacian(w));
    PLapConfig cfg;
    cfg.p = 2.0;
    cfg.m_dims = 3;
    const auto emb = plap_embedding(EdgeGraph{w}, cfg);
    // ordered pairs count every edge twice
    const double optimum = 2.0 * values.head(3).sum();
    CHECK(std::abs(emb.objective - optimum) <= 1e-3);
    CHECK(emb.objective <= emb.initial_objective + 1e-9);
    for (Index m = 0; m < 3; ++m) CHECK(std::abs(emb.lambda(m) - 2.0 * values(m)) <= 1e-4);
  }
}

TEST_CASE("zero coupling gives zero eigenvalues") {
  PLapConfig cfg;
  cfg.p = 2.2;
  const auto emb = plap_embedding(EdgeGraph{Matrix::Zero(5, 5)}, cfg);
  CHECK(emb.lambda == Vector::Zero(5));
  CHECK(emb.objective == 0.0);
  CHECK(emb.converged);
}

TEST_CASE("embedding invariants for p != 2") {
  for (double p : {1.5, 1.8, 2.2, 2.8}) {
    const auto h = random_hypergraph(20, 4, 77);
    PLapConfig cfg;
    cfg.p = p;
    cfg.max_iter = 200;
    const auto g = edge_affinity(h);
    const auto emb = plap_embedding(g, cfg);
    const Index m = emb.q.cols();
    CHECK(m == 20);
    CHECK((emb.q.transpose() * emb.q - Matrix::Identity(m, m)).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(emb.lambda.minCoeff() >= 0.0);
    const Vector again = plap_eigenvalues(g.weights, emb.q, p);
    for (Index i = 0; i < m; ++i)
      CHECK(std::abs(again(i) - emb.lambda(i)) <= 1e-8 * std::max(1.0, std::abs(emb.lambda(i))));
    CHECK(emb.objective <= emb.initial_objective * (1.0 + 1e-9));
    for (const auto& d : emb.diagnostics)
      if (d.iteration % cfg.reorthonormalize_every == 0) CHECK(d.orth_drift <= 1e-10);
    // sign convention
    for (Index c = 0; c < m; ++c) {
      Index arg = 0;
      emb.q.col(c).cwiseAbs().maxCoeff(&arg);
      CHECK(emb.q(arg, c) > 0.0);
    }
  }
}

TEST_CASE("accepted iterations never raise the objective") {
  for (double p : {1.2, 1.5, 1.8, 2.2, 3.0}) {
    for (Index m : {1, 2, 4, 12}) {
      PLapConfig cfg;
      cfg.p = p;
      cfg.m_dims = m;
      cfg.grad_tol = 0.0;
      cfg.max_iter = 100;
      const auto emb = plap_embedding(EdgeGraph{random_edge_weights(12, 55 + m)}, cfg);
      double prev = emb.initial_objective;
      for (const auto& d : emb.diagnostics) {
        CHECK(d.objective <= prev);
        prev = d.objective;
      }
    }
  }
}

TEST_CASE("scaling w scales Lambda and keeps the subspace") {
  const Matrix w = random_edge_weights(14, 31);
  PLapConfig cfg;
  cfg.p = 2.2;
  cfg.m_dims = 4;
  const auto a = plap_embedding(EdgeGraph{w}, cfg);
  const auto b = plap_embedding(EdgeGraph{Matrix(3.7 * w)}, cfg);
  for (Index m = 0; m < 4; ++m)
    CHECK(b.lambda(m) == doctest::Approx(3.7 * a.lambda(m)).epsilon(1e-9));
  CHECK(max_principal_angle(a.q, b.q) <= 1e-3);
}

TEST_CASE("orthonormalize") {
  const Matrix q = orthonormalize(random_matrix(7, 3, 2));
  CHECK((q.transpose() * q - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("regularizer with zero Lambda equals the plain laplacian") {
  const auto h = random_hypergraph(15, 3, 6);
  PLapEmbedding emb;
  emb.q = Matrix::Identity(15, 15);
  emb.lambda = Vector::Zero(15);
  CHECK(plap_regularizer(h, emb) == laplacian_regularizer(h));
  CHECK(plap_regularizer_without_attention(h) == laplacian_regularizer(h));
}

TEST_CASE("regularizer with equal Lambda and full Q is the identity") {
  const auto h = random_hypergraph(12, 3, 7);
  PLapEmbedding emb;
  emb.q = orthonormalize(random_matrix(12, 12, 8));
  emb.lambda = Vector::Constant(12, 5.0);
  const Matrix r = plap_regularizer(h, emb);
  CHECK((r - Matrix::Identity(12, 12)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("regularizer is exactly symmetric and checks dimensions") {
  const auto h = random_hypergraph(18, 4, 9);
  PLapConfig cfg;
  cfg.p = 1.8;
  cfg.max_iter = 50;
  const auto emb = plap_embedding(edge_affinity(h), cfg);
  const Matrix r = plap_regularizer(h, emb);
  CHECK(r == r.transpose());

  const Matrix att = attention_weights(emb);
  CHECK(att.rows() == 18);

  PLapEmbedding wrong;
  wrong.q = Matrix::Identity(5, 5);
  wrong.lambda = Vector::Ones(5);
  CHECK_THROWS_AS(plap_regularizer(h, wrong), InputError);
}

TEST_CASE("config presets and validation") {
  CHECK(PLapConfig::preset("stanford40").p == 1.8);
  CHECK(PLapConfig::preset("uiuc-se").p == 2.2);
  CHECK_THROWS_AS(PLapConfig::preset("other"), InputError);
  PLapConfig cfg;
  cfg.p = 3.5;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg.p = 2.0;
  cfg.m_dims = 9;
  CHECK_THROWS_AS(plap_embedding(EdgeGraph{random_edge_weights(4, 1)}, cfg), InputError);
}

TEST_CASE("diagnostics csv") {
  PLapConfig cfg;
  cfg.p = 2.2;
  cfg.m_dims = 2;
  const auto emb = plap_embedding(EdgeGraph{random_edge_weights(6, 2)}, cfg);
  std::ostringstream os;
  write_plap_diagnostics(os, emb);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "iteration,objective,orth_drift,beta");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == emb.diagnostics.size());
}
