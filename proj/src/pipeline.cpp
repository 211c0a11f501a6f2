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

#include "ssdl/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <climits>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "ssdl/error.hpp"

namespace ssdl {

namespace {

std::string trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw InputError("invalid value '" + std::string(value) + "' for key '" + std::string(key) +
                   "'");
}

template <class T>
T parse_integer(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size())
    bad_value(key, value);
  return out;
}

// Accepts plain decimals, "inf", and powers written as "2^-12".
double parse_real(std::string_view key, std::string_view value) {
  if (auto caret = value.find('^'); caret != std::string_view::npos) {
    const double base = parse_real(key, value.substr(0, caret));
    const double exponent = parse_real(key, value.substr(caret + 1));
    return std::pow(base, exponent);
  }
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size() ||
      std::isnan(out))
    bad_value(key, value);
  return out;
}

std::string real_text(double v) {
  std::ostringstream os;
  write_double(os, v);
  return os.str();
}

struct Field {
  std::string_view name;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field make_field(std::string_view name, T RunConfig::*member) {
  Field f;
  f.name = name;
  f.set = [name, member](RunConfig& cfg, std::string_view value) {
    if constexpr (std::is_same_v<T, double>) {
      cfg.*member = parse_real(name, value);
    } else if constexpr (std::is_same_v<T, bool>) {
      if (value == "true" || value == "1") cfg.*member = true;
      else if (value == "false" || value == "0") cfg.*member = false;
      else bad_value(name, value);
    } else if constexpr (std::is_same_v<T, std::string>) {
      cfg.*member = std::string(value);
    } else {
      cfg.*member = parse_integer<T>(name, value);
    }
  };
  f.get = [member](const RunConfig& cfg) -> std::string {
    if constexpr (std::is_same_v<T, double>) return real_text(cfg.*member);
    else if constexpr (std::is_same_v<T, bool>) return cfg.*member ? "true" : "false";
    else if constexpr (std::is_same_v<T, std::string>) return cfg.*member;
    else return std::to_string(cfg.*member);
  };
  return f;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      make_field("k_neighbors", &RunConfig::k_neighbors),
      make_field("bandwidth", &RunConfig::bandwidth),
      make_field("sigma", &RunConfig::sigma),
      make_field("edge_weight", &RunConfig::edge_weight),
      make_field("normalize", &RunConfig::normalize),
      make_field("p", &RunConfig::p),
      make_field("m_dims", &RunConfig::m_dims),
      make_field("step_beta", &RunConfig::step_beta),
      make_field("plap_max_iter", &RunConfig::plap_max_iter),
      make_field("grad_tol", &RunConfig::grad_tol),
      make_field("reorth_every", &RunConfig::reorth_every),
      make_field("lp_zero", &RunConfig::lp_zero),
      make_field("lambda", &RunConfig::lambda),
      make_field("standardize_supervision", &RunConfig::standardize_supervision),
      make_field("k_atoms", &RunConfig::k_atoms),
      make_field("alpha", &RunConfig::alpha),
      make_field("gamma", &RunConfig::gamma),
      make_field("max_outer", &RunConfig::max_outer),
      make_field("obj_tol", &RunConfig::obj_tol),
      make_field("inner_sweeps", &RunConfig::inner_sweeps),
      make_field("test_alpha", &RunConfig::test_alpha),
      make_field("encode_tol", &RunConfig::encode_tol),
      make_field("encode_max_sweeps", &RunConfig::encode_max_sweeps),
      make_field("classes", &RunConfig::classes),
      make_field("label_rate", &RunConfig::label_rate),
      make_field("train_fraction", &RunConfig::train_fraction),
      make_field("format", &RunConfig::format),
      make_field("seed", &RunConfig::seed),
  };
  return table;
}

const Field& find_field(std::string_view key) {
  for (const auto& f : fields())
    if (f.name == key) return f;
  throw InputError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

const std::vector<std::string_view> kRunConfigKeys = [] {
  std::vector<std::string_view> keys;
  for (const auto& f : fields()) keys.push_back(f.name);
  return keys;
}();

void RunConfig::set(std::string_view key, std::string_view value) {
  find_field(key).set(*this, trim(value));
}

std::string RunConfig::get(std::string_view key) const { return find_field(key).get(*this); }

void RunConfig::validate() const {
  if (bandwidth != "median" && bandwidth != "fixed")
    throw InputError("bandwidth must be 'median' or 'fixed'");
  if (format != "csv" && format != "binary") throw InputError("format must be csv or binary");
  if (!(label_rate >= 0.0 && label_rate <= 1.0)) throw InputError("label_rate must be in [0, 1]");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0))
    throw InputError("train_fraction must be in (0, 1]");
  if (classes < 0 || classes == 1) throw InputError("classes must be 0 (infer) or >= 2");
  if (k_neighbors < 1) throw InputError("k_neighbors must be >= 1");
  plap_config().validate();
  propagation_config().validate();
  train_config().validate();
}

HypergraphConfig RunConfig::hypergraph_config(Index num_samples) const {
  HypergraphConfig h;
  h.k_neighbors = static_cast<int>(std::min<Index>(k_neighbors, num_samples - 1));
  h.bandwidth = bandwidth == "fixed" ? Bandwidth::fixed(sigma) : Bandwidth::median();
  h.initial_edge_weight = edge_weight;
  return h;
}

PLapConfig RunConfig::plap_config() const {
  PLapConfig c;
  c.p = p;
  c.m_dims = m_dims;
  c.step_beta = step_beta;
  c.max_iter = plap_max_iter;
  c.grad_tol = grad_tol;
  c.reorthonormalize_every = reorth_every;
  return c;
}

PropagationConfig RunConfig::propagation_config() const { return {lambda}; }

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.k_atoms = k_atoms;
  t.alpha = alpha;
  t.gamma = gamma;
  t.max_outer = max_outer;
  t.obj_tol = obj_tol;
  t.inner_sweeps = inner_sweeps;
  t.seed = seed;
  return t;
}

EncodeConfig RunConfig::encode_config() const {
  return {test_alpha < 0.0 ? alpha : test_alpha, encode_tol, encode_max_sweeps};
}

void read_run_config(std::istream& in, RunConfig& cfg, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw InputError(source + ": line " + std::to_string(lineno) + ": expected key=value");
    try {
      cfg.set(trim(std::string_view(t).substr(0, eq)), std::string_view(t).substr(eq + 1));
    } catch (const InputError& e) {
      throw InputError(source + ": line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  read_run_config(in, base, path.string());
  return base;
}

void write_run_config(std::ostream& out, const RunConfig& cfg) {
  for (const auto& f : fields()) out << f.name << '=' << f.get(cfg) << '\n';
}

PretextModel build_pretext(const FeatureMatrix& x, const RunConfig& cfg) {
  x.validate();
  PretextModel out;
  const auto hcfg = cfg.hypergraph_config(x.size());
  out.k_neighbors_used = hcfg.k_neighbors;
  out.graph = build_hypergraph(x, hcfg);
  if (cfg.lp_zero) {
    out.embedding.p = cfg.p;
    out.regularizer = plap_regularizer_without_attention(out.graph);
    return out;
  }
  out.embedding = plap_embedding(edge_affinity(out.graph), cfg.plap_config());
  out.regularizer = plap_regularizer(out.graph, out.embedding);
  return out;
}

PseudoLabels generate_pseudo_labels(const PretextModel& pretext, const PartialLabels& labels,
                                    const RunConfig& cfg) {
  if (labels.size() != pretext.graph.num_vertices())
    throw InputError("label count " + std::to_string(labels.size()) +
                     " does not match sample count " +
                     std::to_string(pretext.graph.num_vertices()));
  PseudoLabels out;
  out.initial = build_initial_labels(labels);
  out.pseudo = propagate(out.initial, pretext.regularizer, cfg.propagation_config(), &out.report);
  return out;
}

Matrix prepare_supervision(Matrix f, const RunConfig& cfg) {
  if (!cfg.standardize_supervision) return f;
  for (Index j = 0; j < f.cols(); ++j) {
    f.col(j).array() -= f.col(j).mean();
    const double norm = f.col(j).norm();
    if (norm > 0.0) f.col(j) /= norm;
  }
  return f;
}

TrainResult train_ssdl(const FeatureMatrix& x, const PseudoLabels& labels, const RunConfig& cfg,
                       Supervision supervision) {
  const Matrix& f = supervision == Supervision::pseudo ? labels.pseudo.values
                                                       : labels.initial.values;
  if (f.cols() != x.size()) throw InputError("supervision does not match the sample count");
  return train(x.data, prepare_supervision(f, cfg), cfg.train_config());
}

std::vector<int> nearest_centroid(const FeatureMatrix& train, const PartialLabels& labels,
                                  const FeatureMatrix& test) {
  check_label_count(labels, train);
  labels.require_all_classes();
  Matrix centroids = Matrix::Zero(train.dim(), labels.num_classes);
  Vector counts = Vector::Zero(labels.num_classes);
  for (Index j = 0; j < train.size(); ++j) {
    if (!labels.is_labeled(j)) continue;
    const int c = labels.labels[static_cast<std::size_t>(j)];
    centroids.col(c) += train.data.col(j);
    counts(c) += 1.0;
  }
  for (Index c = 0; c < centroids.cols(); ++c) centroids.col(c) /= counts(c);
  std::vector<int> out(static_cast<std::size_t>(test.size()));
  for (Index j = 0; j < test.size(); ++j) {
    Index best = 0;
    (centroids.colwise() - test.data.col(j)).colwise().squaredNorm().minCoeff(&best);
    out[static_cast<std::size_t>(j)] = static_cast<int>(best);
  }
  return out;
}

PartialLabels load_labels_for(const std::filesystem::path& path, const RunConfig& cfg) {
  if (cfg.classes > 0) return load_labels(path, cfg.classes);
  auto labels = load_labels(path, INT_MAX);
  const int top = labels.labels.empty()
                      ? -1
                      : *std::max_element(labels.labels.begin(), labels.labels.end());
  labels.num_classes = top + 1;
  if (labels.num_classes < 2)
    throw InputError(path.string() +
                     ": cannot infer at least 2 classes from the labels; set 'classes'");
  return labels;
}

void write_run_metadata(const std::filesystem::path& path, std::string_view command,
                        const RunConfig& cfg,
                        const std::vector<std::pair<std::string, std::string>>& extras) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << "command=" << command << '\n';
  out << "version=" << kVersion << '\n';
  out << "eigen_version=" << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.'
      << EIGEN_MINOR_VERSION << '\n';
  out << "threads=1\n";
  for (const auto& [k, v] : extras) out << k << '=' << v << '\n';
  write_run_config(out, cfg);
}

SweepKind parse_sweep_kind(std::string_view name) {
  if (name == "label_rate") return SweepKind::label_rate;
  if (name == "p") return SweepKind::p;
  if (name == "lambda") return SweepKind::lambda;
  if (name == "alpha_gamma") return SweepKind::alpha_gamma;
  throw InputError("unknown sweep kind '" + std::string(name) +
                   "' (label_rate, p, lambda, alpha_gamma)");
}

std::string_view sweep_kind_name(SweepKind kind) {
  switch (kind) {
    case SweepKind::label_rate: return "label_rate";
    case SweepKind::p: return "p";
    case SweepKind::lambda: return "lambda";
    case SweepKind::alpha_gamma: return "alpha_gamma";
  }
  return "unknown";
}

namespace {

double test_accuracy(const FeatureMatrix& train_x, const PseudoLabels& labels,
                     const FeatureMatrix& test_x, const PartialLabels& test_truth,
                     const RunConfig& cfg) {
  const auto trained = train_ssdl(train_x, labels, cfg);
  return accuracy(predict(trained.model, test_x.data, cfg.encode_config()), test_truth);
}

template <class Cell>
SweepRow run_cell(double a, double b, const char* metric, Cell&& cell) {
  SweepRow row{a, b, metric, 0.0, {}};
  try {
    row.value = cell();
  } catch (const Error& e) {
    row.error = std::string(kind_name(e.kind())) + ": " + e.what();
  }
  return row;
}

}  // namespace

std::vector<SweepRow> run_sweep(SweepKind kind, const std::vector<double>& grid,
                                const std::vector<double>& grid2, const FeatureMatrix& train_x,
                                const PartialLabels& train_truth, const FeatureMatrix* test_x,
                                const PartialLabels* test_truth, const RunConfig& cfg) {
  if (grid.empty()) throw InputError("sweep grid is empty");
  check_label_count(train_truth, train_x);
  const bool needs_test = kind == SweepKind::label_rate || kind == SweepKind::alpha_gamma;
  if (needs_test && (test_x == nullptr || test_truth == nullptr))
    throw InputError("an accuracy sweep needs test features and test truth");
  if (needs_test) check_label_count(*test_truth, *test_x);

  std::vector<SweepRow> rows;
  switch (kind) {
    case SweepKind::label_rate: {
      const auto pretext = build_pretext(train_x, cfg);
      for (double rate : grid)
        rows.push_back(run_cell(rate, 0.0, "accuracy", [&] {
          const auto observed = mask_labels(train_truth, rate, cfg.seed);
          const auto labels = generate_pseudo_labels(pretext, observed, cfg);
          return test_accuracy(train_x, labels, *test_x, *test_truth, cfg);
        }));
      break;
    }
    case SweepKind::p: {
      const auto observed = mask_labels(train_truth, cfg.label_rate, cfg.seed);
      for (double p : grid)
        rows.push_back(run_cell(p, 0.0, "cross_entropy", [&] {
          RunConfig local = cfg;
          local.p = p;
          const auto labels = generate_pseudo_labels(build_pretext(train_x, local), observed, local);
          return propagation_cross_entropy(labels.pseudo, train_truth, observed,
                                           CrossEntropyMask::heldout_only);
        }));
      break;
    }
    case SweepKind::lambda: {
      const auto observed = mask_labels(train_truth, cfg.label_rate, cfg.seed);
      const auto pretext = build_pretext(train_x, cfg);
      for (double lambda : grid)
        rows.push_back(run_cell(lambda, 0.0, "cross_entropy", [&] {
          RunConfig local = cfg;
          local.lambda = lambda;
          const auto labels = generate_pseudo_labels(pretext, observed, local);
          return propagation_cross_entropy(labels.pseudo, train_truth, observed,
                                           CrossEntropyMask::heldout_only);
        }));
      break;
    }
    case SweepKind::alpha_gamma: {
      const auto& second = grid2.empty() ? grid : grid2;
      const auto observed = mask_labels(train_truth, cfg.label_rate, cfg.seed);
      const auto labels = generate_pseudo_labels(build_pretext(train_x, cfg), observed, cfg);
      for (double alpha : grid)
        for (double gamma : second)
          rows.push_back(run_cell(alpha, gamma, "accuracy", [&] {
            RunConfig local = cfg;
            local.alpha = alpha;
            local.gamma = gamma;
            return test_accuracy(train_x, labels, *test_x, *test_truth, local);
          }));
      break;
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, SweepKind kind, const std::vector<SweepRow>& rows) {
  out << "kind,param1,param2,metric,value,status\n";
  for (const auto& r : rows) {
    out << sweep_kind_name(kind) << ',';
    write_double(out, r.param1);
    out << ',';
    if (kind == SweepKind::alpha_gamma) write_double(out, r.param2);
    out << ',' << r.metric << ',';
    if (r.error.empty()) {
      write_double(out, r.value);
      out << ",ok\n";
    } else {
      std::string msg = r.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      out << ",error " << msg << '\n';
    }
  }
}

}  // namespace ssdl
