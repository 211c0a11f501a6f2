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

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "ssdl/dictlearn.hpp"
#include "ssdl/error.hpp"
#include "ssdl/pseudolabel.hpp"
#include "support.hpp"

using namespace ssdl;
using ssdl::testing::random_matrix;

namespace {

// Grid minimizer of a s^2 - 2 j s + 2 alpha |s| on [-10, 10], step 1e-4.
double grid_minimizer(double j, double alpha, double a) {
  double best_s = 0.0, best = 0.0;
  for (long i = -100000; i <= 100000; ++i) {
    const double s = static_cast<double>(i) * 1e-4;
    const double v = a * s * s - 2.0 * j * s + 2.0 * alpha * std::abs(s);
    if (v < best) {
      best = v;
      best_s = s;
    }
  }
  return best_s;
}

// One-atom, one-sample model whose coordinate update sees exactly (j, denom).
double scalar_update(double j, double alpha, double denom) {
  DictionaryModel m;
  m.dictionary = Matrix::Zero(1, 1);
  m.dictionary(0, 0) = std::sqrt(denom);
  m.classifier = Matrix::Zero(2, 1);
  m.classifier(0, 0) = 1.0;
  m.codes = Matrix::Zero(1, 1);
  Matrix x(1, 1);
  x(0, 0) = j / std::sqrt(denom);
  TrainConfig cfg;
  cfg.alpha = alpha;
  cfg.gamma = 0.0;
  update_codes(m, x, Matrix::Zero(2, 1), cfg);
  return m.codes(0, 0);
}

double objective_oracle(const DictionaryModel& m, const Matrix& x, const Matrix& f, double alpha,
                        double gamma) {
  double rec = 0.0, l1 = 0.0, lab = 0.0;
  for (Index n = 0; n < x.cols(); ++n) {
    for (Index i = 0; i < x.rows(); ++i) {
      double r = x(i, n);
      for (Index k = 0; k < m.atoms(); ++k) r -= m.dictionary(i, k) * m.codes(k, n);
      rec += r * r;
    }
    for (Index c = 0; c < f.rows(); ++c) {
      double r = f(c, n);
      for (Index k = 0; k < m.atoms(); ++k) r -= m.classifier(c, k) * m.codes(k, n);
      lab += r * r;
    }
    for (Index k = 0; k < m.atoms(); ++k) l1 += std::abs(m.codes(k, n));
  }
  return rec + 2.0 * alpha * l1 + gamma * lab;
}

Matrix one_hot(const std::vector<int>& labels, int classes) {
  Matrix f = Matrix::Zero(classes, static_cast<Index>(labels.size()));
  for (std::size_t j = 0; j < labels.size(); ++j) f(labels[j], static_cast<Index>(j)) = 1.0;
  return f;
}

TrainConfig small_cfg(Index k, double alpha = 0x1p-12, double gamma = 0x1p-12) {
  TrainConfig cfg;
  cfg.k_atoms = k;
  cfg.alpha = alpha;
  cfg.gamma = gamma;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST_CASE("soft threshold") {
  CHECK(coordinate_minimizer(5.0, 1.0, 2.0) == 2.0);
  CHECK(scalar_update(5.0, 1.0, 2.0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(soft_threshold(-3.0, 1.0) == -2.0);
  CHECK(soft_threshold(0.7, 1.0) == 0.0);
  CHECK(soft_threshold(-1.0, 1.0) == 0.0);
  CHECK(scalar_update(0.3, 0.5, 1.7) == 0.0);
}

TEST_CASE("coordinate update matches the grid oracle") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uj(-10.0, 10.0), ua(0.0, 3.0), ud(1.0, 5.0);
  for (int t = 0; t < 60; ++t) {
    const double j = uj(rng), alpha = ua(rng), denom = ud(rng);
    CHECK(std::abs(scalar_update(j, alpha, denom) - grid_minimizer(j, alpha, denom)) <= 1e-3);
  }
}

TEST_CASE("K = 1 least squares in one sweep") {
  const Matrix x = random_matrix(4, 6, 1);
  DictionaryModel m;
  m.dictionary = random_matrix(4, 1, 2);
  m.classifier = Matrix::Ones(2, 1) / std::sqrt(2.0);
  m.codes = Matrix::Zero(1, 6);
  update_codes(m, x, Matrix::Zero(2, 6), small_cfg(1, 0.0, 0.0));
  const Matrix expect = m.dictionary.transpose() * x / m.dictionary.squaredNorm();
  CHECK((m.codes - expect).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("K = 1 dictionary and classifier updates") {
  const Matrix x = random_matrix(3, 5, 4, 0.0, 2.0);
  const Matrix f = random_matrix(2, 5, 5, 0.0, 1.0);
  DictionaryModel m;
  m.dictionary = Vector::Unit(3, 0);
  m.classifier = Vector::Unit(2, 1);
  m.codes = Matrix::Ones(1, 5);
  CHECK(update_dictionary(m, x).empty());
  CHECK((m.dictionary.col(0) - x.rowwise().sum().normalized()).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(update_classifier(m, f).empty());
  CHECK((m.classifier.col(0) - f.rowwise().sum().normalized()).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("atom with an all-zero code row is left alone and flagged") {
  const Matrix x = random_matrix(3, 4, 6);
  DictionaryModel m;
  m.dictionary = random_matrix(3, 2, 7).colwise().normalized();
  m.classifier = random_matrix(2, 2, 8).colwise().normalized();
  m.codes = Matrix::Zero(2, 4);
  m.codes.row(0) = random_matrix(1, 4, 9);
  const Matrix before = m.dictionary;
  CHECK(update_dictionary(m, x) == std::vector<Index>{1});
  CHECK(m.dictionary.col(1) == before.col(1));
  CHECK(m.dictionary.col(0).norm() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("objective against the triple loop") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    DictionaryModel m;
    m.dictionary = random_matrix(5, 4, seed);
    m.classifier = random_matrix(3, 4, seed + 10);
    m.codes = random_matrix(4, 7, seed + 20);
    const Matrix x = random_matrix(5, 7, seed + 30);
    const Matrix f = random_matrix(3, 7, seed + 40);
    const double a = 0.3, g = 0.7;
    CHECK(objective_terms(m, x, f, a, g).total ==
          doctest::Approx(objective_oracle(m, x, f, a, g)).epsilon(1e-10));
  }
}

TEST_CASE("objective special cases") {
  const Matrix x = random_matrix(4, 8, 2);
  const Matrix f = one_hot({0, 1, 0, 1, 0, 1, 0, 1}, 2);
  auto cfg = small_cfg(4, 0.1, 0.5);
  const auto m = init_model(x, f, cfg);
  CHECK(objective(m, x, f, cfg) ==
        doctest::Approx(x.squaredNorm() + 0.5 * f.squaredNorm()).epsilon(1e-14));

  DictionaryModel exact;
  exact.dictionary = random_matrix(4, 3, 1);
  exact.codes = random_matrix(3, 8, 2);
  exact.classifier = random_matrix(2, 3, 3);
  cfg.alpha = cfg.gamma = 0.0;
  CHECK(objective(exact, exact.dictionary * exact.codes, f, cfg) <= 1e-24);
}

TEST_CASE("init is deterministic with unit columns") {
  const Matrix x = random_matrix(6, 20, 8);
  const Matrix f = random_matrix(3, 20, 9);
  const auto cfg = small_cfg(10);
  const auto a = init_model(x, f, cfg);
  const auto b = init_model(x, f, cfg);
  CHECK(a.dictionary == b.dictionary);
  CHECK(a.classifier == b.classifier);
  CHECK(a.codes.isZero());
  for (Index k = 0; k < 10; ++k) {
    CHECK(std::abs(a.dictionary.col(k).norm() - 1.0) <= 1e-12);
    CHECK(std::abs(a.classifier.col(k).norm() - 1.0) <= 1e-12);
  }
  // D columns are distinct normalized samples
  for (Index k = 0; k < 10; ++k) {
    bool found = false;
    for (Index j = 0; j < 20; ++j)
      found |= (a.dictionary.col(k) - x.col(j).normalized()).cwiseAbs().maxCoeff() == 0.0;
    CHECK(found);
    for (Index l = 0; l < k; ++l) CHECK(a.dictionary.col(k) != a.dictionary.col(l));
  }
  CHECK(TrainConfig{}.resolve_atoms(21) == 11);
  CHECK_THROWS_AS(init_model(x, f, small_cfg(21)), InputError);
  auto repl = small_cfg(25);
  repl.allow_replacement = true;
  CHECK(init_model(x, f, repl).atoms() == 25);
}

TEST_CASE("coordinates are scalar minimizers after a sweep") {
  const Matrix x = random_matrix(5, 9, 11);
  const Matrix f = random_matrix(3, 9, 12);
  auto cfg = small_cfg(6, 0.05, 0.4);
  auto m = init_model(x, f, cfg);
  update_codes(m, x, f, cfg);
  update_dictionary(m, x);
  update_classifier(m, f);
  update_codes(m, x, f, cfg);
  // after a full sweep the last row (k = K-1) was set with all others fixed
  const Index k = m.atoms() - 1;
  const Matrix gram = m.dictionary.transpose() * m.dictionary +
                      cfg.gamma * m.classifier.transpose() * m.classifier;
  for (Index n = 0; n < x.cols(); ++n) {
    const double base = objective(m, x, f, cfg);
    for (double h : {1e-4, -1e-4}) {
      auto p = m;
      p.codes(k, n) += h;
      CHECK(objective(p, x, f, cfg) >= base - 1e-12);
    }
    CHECK(gram(k, k) > 0.0);
  }
}

TEST_CASE("dictionary columns are block optimal") {
  const Matrix x = random_matrix(5, 12, 21);
  const Matrix f = random_matrix(2, 12, 22);
  auto cfg = small_cfg(4, 0.01, 0.1);
  auto m = init_model(x, f, cfg);
  update_codes(m, x, f, cfg);
  update_dictionary(m, x);
  // the last column was updated with the others at their final values
  const Index k = m.atoms() - 1;
  const double base = objective_terms(m, x, f, 0.0, 0.0).reconstruction;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  for (int t = 0; t < 50; ++t) {
    Vector dir(5);
    for (Index i = 0; i < 5; ++i) dir(i) = g(rng);
    auto p = m;
    p.dictionary.col(k) = (m.dictionary.col(k) + 1e-3 * dir.normalized()).normalized();
    CHECK(objective_terms(p, x, f, 0.0, 0.0).reconstruction >= base - 1e-8);
  }
}

TEST_CASE("gamma = 0 makes the classifier update neutral") {
  const Matrix x = random_matrix(4, 10, 31);
  const Matrix f = random_matrix(3, 10, 32);
  auto cfg = small_cfg(5, 0.01, 0.0);
  auto m = init_model(x, f, cfg);
  update_codes(m, x, f, cfg);
  update_dictionary(m, x);
  const double before = objective(m, x, f, cfg);
  update_classifier(m, f);
  CHECK(objective(m, x, f, cfg) == before);
}

TEST_CASE("huge alpha zeroes the codes") {
  const Matrix x = random_matrix(4, 10, 41);
  const Matrix f = random_matrix(2, 10, 42);
  auto cfg = small_cfg(5, 1e6, 0x1p-12);
  const auto r = train(x, f, cfg);
  CHECK(r.model.codes.isZero());
  CHECK(r.trace.rows.back().nonzero_fraction == 0.0);
}

TEST_CASE("training trace is monotone") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> ud(2, 8), un(5, 40), uk(1, 20);
  for (int t = 0; t < 15; ++t) {
    const int dim = ud(rng), n = un(rng);
    const Matrix x = random_matrix(dim, n, 100 + t);
    const Matrix f = random_matrix(3, n, 200 + t, 0.0, 1.0);
    auto cfg = small_cfg(std::min(uk(rng), n), 0.01 * (t % 3), 0.5 * (t % 2));
    cfg.max_outer = 30;
    cfg.obj_tol = 0.0;
    int observed = 0;
    const auto r = train(x, f, cfg, [&](const TraceRow&) { ++observed; });
    CHECK(observed == static_cast<int>(r.trace.rows.size()));
    for (std::size_t i = 1; i < r.trace.rows.size(); ++i)
      CHECK(r.trace.rows[i].terms.total <= r.trace.rows[i - 1].terms.total + 1e-9);
    for (Index k = 0; k < r.model.atoms(); ++k) {
      const bool unused =
          std::find(r.trace.unused_atoms.begin(), r.trace.unused_atoms.end(), k) !=
          r.trace.unused_atoms.end();
      if (!unused) CHECK(std::abs(r.model.dictionary.col(k).norm() - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("training is deterministic") {
  const Matrix x = random_matrix(4, 16, 51);
  const Matrix f = random_matrix(2, 16, 52);
  const auto a = train(x, f, small_cfg(8));
  const auto b = train(x, f, small_cfg(8));
  std::ostringstream ta, tb;
  write_trace_csv(ta, a.trace);
  write_trace_csv(tb, b.trace);
  CHECK(ta.str() == tb.str());
  CHECK(a.model.dictionary == b.model.dictionary);
}

TEST_CASE("blobs with one-hot supervision are fit on the training set") {
  const auto data = make_synthetic({3, 30, 5, 0.1, 42});
  const Matrix f = one_hot(data.truth.labels, 3);
  TrainConfig cfg;
  cfg.seed = 42;
  const auto r = train(data.features.data, f, cfg);
  const auto pred = column_argmax(r.model.classifier * r.model.codes);
  int hits = 0;
  for (std::size_t j = 0; j < pred.size(); ++j) hits += pred[j] == data.truth.labels[j];
  CHECK(static_cast<double>(hits) / 90.0 >= 0.95);
}

TEST_CASE("model and trace files") {
  ssdl::testing::TempDir dir("dl_model");
  const Matrix x = random_matrix(3, 8, 61);
  const Matrix f = random_matrix(2, 8, 62);
  const auto r = train(x, f, small_cfg(4));
  save_model(r.model, dir / "m.bin");
  const auto back = load_model(dir / "m.bin");
  CHECK(back.dictionary == r.model.dictionary);
  CHECK(back.classifier == r.model.classifier);
  std::ostringstream os;
  write_trace_csv(os, r.trace);
  CHECK(os.str().rfind("iteration,total,reconstruction,l1,label,nonzero_fraction\n", 0) == 0);
}

TEST_CASE("degenerate atoms and bad configs") {
  DictionaryModel m;
  m.dictionary = Matrix::Zero(2, 1);
  m.classifier = Matrix::Zero(2, 1);
  m.codes = Matrix::Zero(1, 3);
  CHECK_THROWS_WITH_AS(update_codes(m, Matrix::Ones(2, 3), Matrix::Ones(2, 3), TrainConfig{}),
                       doctest::Contains("atom 0"), NumericalError);
  TrainConfig bad;
  bad.alpha = -1.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = {};
  bad.max_outer = 0;
  CHECK_THROWS_AS(bad.validate(), InputError);
}
