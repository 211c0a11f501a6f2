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

#include "ssdl/dictlearn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "ssdl/error.hpp"

namespace ssdl {

namespace {

void check_shapes(const DictionaryModel& model, const Matrix& x, const Matrix& f) {
  if (model.dictionary.rows() != x.rows())
    throw InputError("dictionary dimension does not match the data");
  if (model.classifier.rows() != f.rows())
    throw InputError("classifier class count does not match the labels");
  if (x.cols() != f.cols()) throw InputError("data and label matrices disagree on N");
  if (model.codes.rows() != model.atoms() || model.codes.cols() != x.cols())
    throw InputError("code matrix shape does not match K x N");
}

// Shared by the dictionary and classifier updates: for every column k,
// target * s_k^T - (M with column k zeroed) * S * s_k^T, normalized.
std::vector<Index> block_update(Matrix& atoms, const Matrix& target, const Matrix& codes) {
  std::vector<Index> unused;
  const Matrix target_st = target * codes.transpose();  // columns: target * s_k^T
  const Matrix gram = codes * codes.transpose();        // columns: S * s_k^T
  for (Index k = 0; k < atoms.cols(); ++k) {
    const double row_norm2 = gram(k, k);
    if (row_norm2 == 0.0) {
      unused.push_back(k);
      continue;
    }
    Vector direction = target_st.col(k) - atoms * gram.col(k) + atoms.col(k) * row_norm2;
    const double norm = direction.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      unused.push_back(k);
      continue;
    }
    atoms.col(k) = direction / norm;
  }
  return unused;
}

double nonzero_fraction(const Matrix& s) {
  if (s.size() == 0) return 0.0;
  return static_cast<double>((s.array() != 0.0).count()) / static_cast<double>(s.size());
}

}  // namespace

Index TrainConfig::resolve_atoms(Index num_samples) const {
  return k_atoms > 0 ? k_atoms : (num_samples + 1) / 2;
}

void TrainConfig::validate() const {
  if (k_atoms < 0) throw InputError("k_atoms must be >= 0");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InputError("alpha must be >= 0");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InputError("gamma must be >= 0");
  if (max_outer < 1) throw InputError("max_outer must be >= 1");
  if (!(obj_tol >= 0.0)) throw InputError("obj_tol must be >= 0");
  if (inner_sweeps < 1) throw InputError("inner_sweeps must be >= 1");
}

ObjectiveTerms objective_terms(const DictionaryModel& model, const Matrix& x, const Matrix& f,
                               double alpha, double gamma) {
  ObjectiveTerms t;
  t.reconstruction = (x - model.dictionary * model.codes).squaredNorm();
  t.sparsity = 2.0 * alpha * model.codes.cwiseAbs().sum();
  t.label = gamma == 0.0 ? 0.0 : gamma * (f - model.classifier * model.codes).squaredNorm();
  t.total = t.reconstruction + t.sparsity + t.label;
  return t;
}

double objective(const DictionaryModel& model, const Matrix& x, const Matrix& f,
                 const TrainConfig& cfg) {
  check_shapes(model, x, f);
  return objective_terms(model, x, f, cfg.alpha, cfg.gamma).total;
}

double soft_threshold(double j, double alpha) {
  const double mag = std::abs(j) - alpha;
  return mag > 0.0 ? std::copysign(mag, j) : 0.0;
}

DictionaryModel init_model(const Matrix& x, const Matrix& f, const TrainConfig& cfg) {
  cfg.validate();
  if (x.cols() != f.cols()) throw InputError("data and label matrices disagree on N");
  const Index n = x.cols();
  const Index k = cfg.resolve_atoms(n);

  std::mt19937_64 rng(cfg.seed);
  std::vector<Index> candidates;
  for (Index j = 0; j < n; ++j)
    if (x.col(j).norm() > 0.0) candidates.push_back(j);
  std::vector<Index> picked;
  if (cfg.allow_replacement) {
    if (candidates.empty()) throw InputError("all samples are zero; cannot seed atoms");
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    for (Index a = 0; a < k; ++a) picked.push_back(candidates[pick(rng)]);
  } else {
    if (k > static_cast<Index>(candidates.size()))
      throw InputError("K = " + std::to_string(k) + " exceeds the " +
                       std::to_string(candidates.size()) +
                       " nonzero samples available without replacement");
    std::shuffle(candidates.begin(), candidates.end(), rng);
    picked.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k));
  }

  DictionaryModel model;
  model.dictionary.resize(x.rows(), k);
  for (Index a = 0; a < k; ++a)
    model.dictionary.col(a) = x.col(picked[static_cast<std::size_t>(a)]).normalized();

  std::normal_distribution<double> gauss(0.0, 1.0);
  model.classifier.resize(f.rows(), k);
  for (Index a = 0; a < k; ++a) {
    double norm = 0.0;
    while (!(norm > 0.0)) {
      for (Index c = 0; c < f.rows(); ++c) model.classifier(c, a) = gauss(rng);
      norm = model.classifier.col(a).norm();
    }
    model.classifier.col(a) /= norm;
  }
  model.codes = Matrix::Zero(k, n);
  return model;
}

void update_codes(DictionaryModel& model, const Matrix& x, const Matrix& f,
                  const TrainConfig& cfg) {
  check_shapes(model, x, f);
  const Matrix gram = model.dictionary.transpose() * model.dictionary +
                      cfg.gamma * model.classifier.transpose() * model.classifier;
  const Matrix rhs = model.dictionary.transpose() * x +
                     cfg.gamma * model.classifier.transpose() * f;
  Matrix& s = model.codes;
  for (int sweep = 0; sweep < cfg.inner_sweeps; ++sweep) {
    for (Index k = 0; k < s.rows(); ++k) {
      const double denom = gram(k, k);
      if (!(denom > 0.0))
        throw NumericalError("degenerate atom " + std::to_string(k) +
                             ": (D^T D + gamma B^T B)_kk is not positive");
      // J excludes the l == k term of the coupling sum.
      Eigen::RowVectorXd j = rhs.row(k) - gram.row(k) * s + denom * s.row(k);
      for (Index n = 0; n < s.cols(); ++n)
        s(k, n) = coordinate_minimizer(j(n), cfg.alpha, denom);
    }
  }
}

std::vector<Index> update_dictionary(DictionaryModel& model, const Matrix& x) {
  if (model.dictionary.rows() != x.rows() || model.codes.cols() != x.cols())
    throw InputError("data shape does not match the model");
  return block_update(model.dictionary, x, model.codes);
}

std::vector<Index> update_classifier(DictionaryModel& model, const Matrix& f) {
  if (model.classifier.rows() != f.rows() || model.codes.cols() != f.cols())
    throw InputError("label shape does not match the model");
  return block_update(model.classifier, f, model.codes);
}

TrainResult train(const Matrix& x, const Matrix& f, const TrainConfig& cfg,
                  const TraceObserver& observer) {
  TrainResult result;
  result.model = init_model(x, f, cfg);
  auto& model = result.model;
  auto& trace = result.trace;

  auto evaluate = [&] { return objective_terms(model, x, f, cfg.alpha, cfg.gamma); };
  auto check = [&](double before, double after, int it, const char* block) {
    const double slack = 1e-9 + 1e-13 * std::abs(before);
    if (after > before + slack) {
      std::ostringstream os;
      os.precision(17);
      os << "objective increased in the " << block << " update of outer iteration " << it
         << ": " << before << " -> " << after;
      throw InvariantError(os.str());
    }
  };

  trace.rows.push_back({0, evaluate(), nonzero_fraction(model.codes)});
  if (observer) observer(trace.rows.back());
  for (int it = 1; it <= cfg.max_outer; ++it) {
    const double start = trace.rows.back().terms.total;
    update_codes(model, x, f, cfg);
    const double after_codes = evaluate().total;
    check(start, after_codes, it, "code");
    trace.unused_atoms = update_dictionary(model, x);
    const double after_dict = evaluate().total;
    check(after_codes, after_dict, it, "dictionary");
    update_classifier(model, f);
    const auto terms = evaluate();
    check(after_dict, terms.total, it, "classifier");

    trace.rows.push_back({it, terms, nonzero_fraction(model.codes)});
    if (observer) observer(trace.rows.back());
    const double decrease = (start - terms.total) / std::max(std::abs(start), 1e-300);
    if (decrease < cfg.obj_tol) {
      trace.converged = true;
      break;
    }
  }
  return result;
}

void write_trace_csv(std::ostream& out, const TrainTrace& trace) {
  out << "iteration,total,reconstruction,l1,label,nonzero_fraction\n";
  for (const auto& r : trace.rows) {
    out << r.iteration << ',';
    write_double(out, r.terms.total);
    out << ',';
    write_double(out, r.terms.reconstruction);
    out << ',';
    write_double(out, r.terms.sparsity);
    out << ',';
    write_double(out, r.terms.label);
    out << ',';
    write_double(out, r.nonzero_fraction);
    out << '\n';
  }
}

void save_model(const DictionaryModel& model, const std::filesystem::path& path) {
  save_model_file(path, model.dictionary, model.classifier);
}

DictionaryModel load_model(const std::filesystem::path& path) {
  auto [d, b] = load_model_file(path);
  DictionaryModel model;
  model.dictionary = std::move(d);
  model.classifier = std::move(b);
  return model;
}

}  // namespace ssdl
