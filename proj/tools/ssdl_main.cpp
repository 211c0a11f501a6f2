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

// ssdl: batch front end for pseudo-labelling, dictionary training,
// prediction and parameter sweeps.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ssdl/error.hpp"
#include "ssdl/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ssdl;

namespace {

// Config sources in increasing priority: defaults, --config, flags.
struct ConfigOptions {
  std::string config_path;
  std::map<std::string, std::string> flags;  // key -> raw value
  std::vector<std::string> overrides;        // --set key=value

  void attach(CLI::App* app, bool with_classes = true) {
    app->add_option("--config", config_path, "key=value run configuration file");
    add_flag(app, "--p", "p", "p-Laplacian exponent");
    add_flag(app, "--lambda", "lambda", "propagation fidelity weight");
    add_flag(app, "--alpha", "alpha", "l1 weight of the codes");
    add_flag(app, "--gamma", "gamma", "label-term weight");
    add_flag(app, "--k-atoms", "k_atoms", "dictionary size (0: half the samples)");
    add_flag(app, "--k-neighbors", "k_neighbors", "neighbours per hyperedge");
    add_flag(app, "--label-rate", "label_rate", "fraction of labeled samples");
    add_flag(app, "--seed", "seed", "run seed");
    add_flag(app, "--format", "format", "feature file format: csv or binary");
    if (with_classes) add_flag(app, "--classes", "classes", "class count (0: infer from labels)");
    app->add_option("--set", overrides, "any config key as key=value")->take_all();
  }

  void add_flag(CLI::App* app, const std::string& flag, const std::string& key,
                const std::string& help) {
    app->add_option_function<std::string>(
        flag, [this, key](const std::string& v) { flags[key] = v; }, help);
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_run_config(config_path);
    for (const auto& [k, v] : flags) cfg.set(k, v);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw InputError("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
  }
};

std::string real_text(double v) {
  std::ostringstream os;
  write_double(os, v);
  return os.str();
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

std::string meta_path(const std::string& output) { return output + ".meta"; }

FeatureMatrix load_prepared(const fs::path& path, const RunConfig& cfg) {
  auto x = load_features(path, parse_file_format(cfg.format));
  if (cfg.normalize) normalize_columns(x);
  return x;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string cell;
  RunConfig scratch;
  while (std::getline(ss, cell, ',')) {
    scratch.set("sigma", cell);  // reuse the config number parser (accepts 2^-12)
    grid.push_back(scratch.sigma);
  }
  if (grid.empty()) throw InputError("grid is empty");
  return grid;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  int classes = 3, per_class = 40, dim = 10;
  double spread = 0.3;
  std::string prefix;
};

int run_synth(const SynthArgs& a, const RunConfig& cfg) {
  SyntheticSpec spec{a.classes, a.per_class, a.dim, a.spread, cfg.seed};
  const auto data = make_synthetic(spec);
  const auto format = parse_file_format(cfg.format);
  const std::string ext = format == FileFormat::csv ? ".csv" : ".bin";
  const auto split = split_train_test(data.features, data.truth, cfg.train_fraction, cfg.seed);
  const auto observed = mask_labels(split.train_y, cfg.label_rate, cfg.seed);

  save_features(split.train_x, a.prefix + "_train" + ext, format);
  save_labels(observed, a.prefix + "_train_labels.txt");
  save_labels(split.train_y, a.prefix + "_train_truth.txt");
  if (!split.test_columns.empty()) {
    save_features(split.test_x, a.prefix + "_test" + ext, format);
    save_labels(split.test_y, a.prefix + "_test_truth.txt");
  }
  write_run_metadata(meta_path(a.prefix), "synth", cfg,
                     {{"synth_classes", std::to_string(a.classes)},
                      {"synth_per_class", std::to_string(a.per_class)},
                      {"synth_dim", std::to_string(a.dim)},
                      {"synth_spread", real_text(a.spread)}});
  std::cout << "train=" << split.train_x.size() << " test=" << split.test_x.size()
            << " labeled=" << observed.num_labeled() << '\n';
  return 0;
}

struct PseudoArgs {
  std::string features, labels, out, truth, eigenvalues, diagnostics, hypergraph;
};

int run_pseudolabel(const PseudoArgs& a, const RunConfig& cfg) {
  const auto x = load_prepared(a.features, cfg);
  const auto labels = load_labels_for(a.labels, cfg);
  check_label_count(labels, x);
  const auto pretext = build_pretext(x, cfg);
  const auto result = generate_pseudo_labels(pretext, labels, cfg);
  for (const auto& w : result.report.warnings) std::cerr << "warning: " << w << '\n';

  {
    auto out = open_output(a.out);
    write_pseudo_labels_csv(out, result.pseudo, x.sample_ids);
  }
  if (!a.eigenvalues.empty()) {
    auto out = open_output(a.eigenvalues);
    out << "index,lambda\n";
    for (Index m = 0; m < pretext.embedding.lambda.size(); ++m) {
      out << m << ',';
      write_double(out, pretext.embedding.lambda(m));
      out << '\n';
    }
  }
  if (!a.diagnostics.empty()) {
    auto out = open_output(a.diagnostics);
    write_plap_diagnostics(out, pretext.embedding);
  }
  if (!a.hypergraph.empty())
    save_incidence(pretext.graph, a.hypergraph, parse_file_format(cfg.format));

  std::vector<std::pair<std::string, std::string>> extras = {
      {"features", a.features},
      {"labels", a.labels},
      {"sigma", real_text(pretext.graph.sigma())},
      {"k_neighbors_used", std::to_string(pretext.k_neighbors_used)},
      {"plap_iterations", std::to_string(pretext.embedding.iterations)},
      {"plap_converged", pretext.embedding.converged ? "true" : "false"},
      {"ridge_added", result.report.ridge_added ? "true" : "false"}};
  if (!a.truth.empty()) {
    auto truth = load_labels(a.truth, labels.num_classes);
    check_label_count(truth, x);
    const double ce = propagation_cross_entropy(result.pseudo, truth, labels,
                                                CrossEntropyMask::heldout_only);
    extras.emplace_back("cross_entropy", real_text(ce));
    std::cout << "cross_entropy=" << real_text(ce) << '\n';
  }
  write_run_metadata(meta_path(a.out), "pseudolabel", cfg, extras);
  return 0;
}

struct TrainArgs {
  std::string features, labels, pseudo, out, trace, pseudo_out;
  std::string supervision = "pseudo";
};

int run_train(const TrainArgs& a, const RunConfig& cfg) {
  const auto x = load_prepared(a.features, cfg);
  if (a.labels.empty() == a.pseudo.empty())
    throw InputError("train needs exactly one of --labels or --pseudo");

  std::vector<std::pair<std::string, std::string>> extras = {{"features", a.features}};
  Matrix supervision;
  if (!a.pseudo.empty()) {
    std::ifstream in(a.pseudo);
    if (!in) throw InputError("cannot open " + a.pseudo);
    supervision = read_pseudo_labels_csv(in, a.pseudo).values;
    extras.emplace_back("pseudo", a.pseudo);
  } else {
    const auto labels = load_labels_for(a.labels, cfg);
    check_label_count(labels, x);
    extras.emplace_back("labels", a.labels);
    extras.emplace_back("supervision", a.supervision);
    if (a.supervision == "initial") {
      supervision = build_initial_labels(labels).values;
    } else if (a.supervision == "pseudo") {
      const auto pretext = build_pretext(x, cfg);
      auto result = generate_pseudo_labels(pretext, labels, cfg);
      for (const auto& w : result.report.warnings) std::cerr << "warning: " << w << '\n';
      extras.emplace_back("sigma", real_text(pretext.graph.sigma()));
      if (!a.pseudo_out.empty()) {
        auto out = open_output(a.pseudo_out);
        write_pseudo_labels_csv(out, result.pseudo, x.sample_ids);
      }
      supervision = std::move(result.pseudo.values);
    } else {
      throw InputError("--supervision must be 'pseudo' or 'initial'");
    }
  }
  if (supervision.cols() != x.size())
    throw InputError("supervision has " + std::to_string(supervision.cols()) +
                     " columns but there are " + std::to_string(x.size()) + " samples");

  const auto result = train(x.data, prepare_supervision(std::move(supervision), cfg),
                            cfg.train_config());
  save_model(result.model, a.out);
  if (!a.trace.empty()) {
    auto out = open_output(a.trace);
    write_trace_csv(out, result.trace);
  }
  const auto& last = result.trace.rows.back();
  extras.emplace_back("outer_iterations", std::to_string(last.iteration));
  extras.emplace_back("final_objective", real_text(last.terms.total));
  extras.emplace_back("unused_atoms", std::to_string(result.trace.unused_atoms.size()));
  write_run_metadata(meta_path(a.out), "train", cfg, extras);
  std::cout << "objective=" << real_text(last.terms.total)
            << " iterations=" << last.iteration << '\n';
  return 0;
}

struct PredictArgs {
  std::string model, features, truth, out;
};

int run_predict(const PredictArgs& a, const RunConfig& cfg, const char* command) {
  const auto model = load_model(a.model);
  const auto x = load_prepared(a.features, cfg);
  const auto pred = predict(model, x.data, cfg.encode_config());
  std::vector<std::pair<std::string, std::string>> extras = {{"model", a.model},
                                                             {"features", a.features}};
  if (!a.out.empty()) {
    auto out = open_output(a.out);
    write_predictions_csv(out, pred, x.sample_ids);
  }
  if (!a.truth.empty()) {
    const auto truth = load_labels(a.truth, static_cast<int>(model.classes()));
    check_label_count(truth, x);
    const double acc = accuracy(pred, truth);
    extras.emplace_back("accuracy", real_text(acc));
    std::cout << "accuracy=" << real_text(acc) << '\n';
  }
  if (!a.out.empty()) write_run_metadata(meta_path(a.out), command, cfg, extras);
  return 0;
}

struct SweepArgs {
  std::string kind, grid, grid2, features, truth, test_features, test_truth, out;
};

int run_sweep_command(const SweepArgs& a, const RunConfig& cfg) {
  const auto kind = parse_sweep_kind(a.kind);
  const auto grid = parse_grid(a.grid);
  const auto grid2 = a.grid2.empty() ? std::vector<double>{} : parse_grid(a.grid2);
  const auto x = load_prepared(a.features, cfg);
  const auto truth = load_labels_for(a.truth, cfg);
  std::optional<FeatureMatrix> test_x;
  std::optional<PartialLabels> test_y;
  if (!a.test_features.empty()) {
    test_x = load_prepared(a.test_features, cfg);
    if (a.test_truth.empty()) throw InputError("--test-features needs --test-truth");
    test_y = load_labels(a.test_truth, truth.num_classes);
  }
  const auto rows = run_sweep(kind, grid, grid2, x, truth, test_x ? &*test_x : nullptr,
                              test_y ? &*test_y : nullptr, cfg);
  {
    auto out = open_output(a.out);
    write_sweep_csv(out, kind, rows);
  }
  write_run_metadata(meta_path(a.out), "sweep", cfg,
                     {{"kind", a.kind}, {"grid", a.grid}, {"grid2", a.grid2},
                      {"features", a.features}, {"truth", a.truth}});
  std::cout << "rows=" << rows.size() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-supervised label-embedded dictionary learning"};
  app.require_subcommand(1);

  ConfigOptions synth_cfg, pseudo_cfg, train_cfg, predict_cfg, eval_cfg, sweep_cfg;

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a Gaussian-blob dataset");
  synth_cmd->add_option("--classes", synth.classes, "number of classes");
  synth_cmd->add_option("--per-class", synth.per_class, "samples per class");
  synth_cmd->add_option("--dim", synth.dim, "feature dimension");
  synth_cmd->add_option("--spread", synth.spread, "per-sample noise standard deviation");
  synth_cmd->add_option("--out", synth.prefix, "output prefix")->required();
  synth_cfg.attach(synth_cmd, false);
  synth_cfg.add_flag(synth_cmd, "--train-fraction", "train_fraction", "train share per class");

  PseudoArgs pseudo;
  auto* pseudo_cmd = app.add_subcommand("pseudolabel", "propagate partial labels");
  pseudo_cmd->add_option("features", pseudo.features)->required();
  pseudo_cmd->add_option("labels", pseudo.labels)->required();
  pseudo_cmd->add_option("--out", pseudo.out, "pseudo-label CSV")->required();
  pseudo_cmd->add_option("--truth", pseudo.truth, "full labels for held-out cross-entropy");
  pseudo_cmd->add_option("--eigenvalues", pseudo.eigenvalues, "p-eigenvalue CSV");
  pseudo_cmd->add_option("--diagnostics", pseudo.diagnostics, "embedding iteration CSV");
  pseudo_cmd->add_option("--hypergraph", pseudo.hypergraph, "incidence matrix dump");
  pseudo_cfg.attach(pseudo_cmd);

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "train dictionary and classifier");
  train_cmd->add_option("features", tr.features)->required();
  train_cmd->add_option("--labels", tr.labels, "partial label file");
  train_cmd->add_option("--pseudo", tr.pseudo, "pseudo-label CSV from 'pseudolabel'");
  train_cmd->add_option("--supervision", tr.supervision, "pseudo (default) or initial");
  train_cmd->add_option("--pseudo-out", tr.pseudo_out, "also write the pseudo-label CSV");
  train_cmd->add_option("--out", tr.out, "model file")->required();
  train_cmd->add_option("--trace", tr.trace, "objective trace CSV");
  train_cfg.attach(train_cmd);

  PredictArgs pr;
  auto* predict_cmd = app.add_subcommand("predict", "classify samples with a model");
  predict_cmd->add_option("model", pr.model)->required();
  predict_cmd->add_option("features", pr.features)->required();
  predict_cmd->add_option("--out", pr.out, "prediction CSV")->required();
  predict_cmd->add_option("--truth", pr.truth, "labels; prints accuracy when given");
  predict_cfg.attach(predict_cmd);

  PredictArgs ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "accuracy of a model on labeled samples");
  eval_cmd->add_option("model", ev.model)->required();
  eval_cmd->add_option("features", ev.features)->required();
  eval_cmd->add_option("truth", ev.truth)->required();
  eval_cmd->add_option("--out", ev.out, "prediction CSV");
  eval_cfg.attach(eval_cmd);

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "parameter sweep to CSV");
  sweep_cmd->add_option("--kind", sw.kind, "label_rate, p, lambda or alpha_gamma")->required();
  sweep_cmd->add_option("--grid", sw.grid, "comma-separated values")->required();
  sweep_cmd->add_option("--grid2", sw.grid2, "second axis for alpha_gamma (gamma values)");
  sweep_cmd->add_option("features", sw.features)->required();
  sweep_cmd->add_option("truth", sw.truth, "full training labels")->required();
  sweep_cmd->add_option("--test-features", sw.test_features);
  sweep_cmd->add_option("--test-truth", sw.test_truth);
  sweep_cmd->add_option("--out", sw.out, "results CSV")->required();
  sweep_cfg.attach(sweep_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::input);
  }

  try {
    if (*synth_cmd) return run_synth(synth, synth_cfg.resolve());
    if (*pseudo_cmd) return run_pseudolabel(pseudo, pseudo_cfg.resolve());
    if (*train_cmd) return run_train(tr, train_cfg.resolve());
    if (*predict_cmd) return run_predict(pr, predict_cfg.resolve(), "predict");
    if (*eval_cmd) return run_predict(ev, eval_cfg.resolve(), "evaluate");
    if (*sweep_cmd) return run_sweep_command(sw, sweep_cfg.resolve());
  } catch (const Error& e) {
    std::cerr << "error: kind=" << kind_name(e.kind()) << " code=" << e.exit_code()
              << " message=\"" << e.what() << "\"\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: kind=invariant code=4 message=\"" << e.what() << "\"\n";
    return static_cast<int>(ErrorKind::invariant);
  }
  return 0;
}
