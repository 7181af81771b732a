/*
 * Copyright 2026 The Mirage Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// mirage: train, tune, evaluate and exercise the detection/deception engine.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mirage/mirage.hpp"

namespace {

using nlohmann::json;
using namespace mirage;

struct Options {
  std::uint64_t seed = 42;

  // data
  std::string data;
  std::string schema;
  std::string label_column = "Label";
  std::string cleaning = "drop_row";

  // model
  std::string model;
  double train_fraction = 0.7;
  std::vector<double> weights{0.35, 0.35, 0.20, 0.10};
  double smote_ratio = 0.5;
  double under_ratio = 0.7;
  int k_neighbors = 5;
  int rf_trees = 150;
  int rf_depth = 25;
  int gbt_trees = 200;
  double gbt_learning_rate = 0.1;
  int gbt_depth = 6;
  std::vector<int> mlp_hidden{256, 128, 64};
  int mlp_epochs = 200;
  int mlp_patience = 10;
  double mlp_learning_rate = 1e-3;
  int if_trees = 100;
  int if_subsample = 256;

  // tuning
  double validation_fraction = 0.1;
  double grid_start = 0.25;
  double grid_stop = 0.65;
  double grid_step = 0.05;

  // evaluation / replay
  std::size_t sample_size = 50000;
  std::size_t bootstrap = 1000;
  double level = 0.95;
  double rate = 100.0;
  std::size_t benign_sources = 500;
  std::string report_json;
  std::string report_text;
  std::string decoys;
  double theta = -1.0;

  // simulation
  std::string scenario_class = "automated";
  double tau = -1.0;
  double sigma = -1.0;
  std::size_t events = 50;
  double attack_mix = 1.0;
  std::string source = "sim-attacker";
  std::string out;

  // live / profile report
  std::string events_file;
  std::string signals_out;
  std::string profiles_out;

  // synthetic data
  std::size_t n = 5000;
  double attack_ratio = 0.2;
  double shift = 1.0;
};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string config_hash(const json& config) { return hex64(fnv1a(config.dump())); }

EnsembleWeights weights_from(const Options& o) {
  if (o.weights.size() != 4) throw UsageError("--weights takes four values: rf nn xgb anom");
  EnsembleWeights w{o.weights[0], o.weights[1], o.weights[2], o.weights[3]};
  w.validate();
  return w;
}

std::vector<std::string> schema_from(const Options& o, const ModelBundle* bundle = nullptr) {
  if (!o.schema.empty()) return load_schema(o.schema);
  if (bundle && bundle->metadata.contains("feature_names")) {
    return bundle->metadata["feature_names"].get<std::vector<std::string>>();
  }
  return default_schema();
}

Dataset load_clean(const Options& o, const std::vector<std::string>& schema) {
  if (o.data.empty()) throw UsageError("--data is required");
  const Dataset raw = parse_flow_csv(o.data, schema, o.label_column);
  for (const auto& w : raw.provenance.warnings) std::cerr << "warning: " << w << '\n';
  const auto policy = parse_cleaning_policy(o.cleaning);
  if (!policy) throw UsageError("unknown cleaning policy '" + o.cleaning + "'");
  Dataset clean = clean_dataset(raw, *policy);
  if (clean.empty()) throw DataError("no usable flows in '" + o.data + "'");
  return clean;
}

TrainConfig train_config(const Options& o) {
  TrainConfig c;
  c.seed = o.seed;
  c.train_fraction = o.train_fraction;
  c.weights = weights_from(o);
  c.resample.smote_ratio = o.smote_ratio;
  c.resample.under_ratio = o.under_ratio;
  c.resample.k_neighbors = o.k_neighbors;
  c.resample.validate();
  c.rf.n_trees = o.rf_trees;
  c.rf.max_depth = o.rf_depth;
  c.gbt.n_trees = o.gbt_trees;
  c.gbt.learning_rate = o.gbt_learning_rate;
  c.gbt.max_depth = o.gbt_depth;
  c.mlp.hidden = o.mlp_hidden;
  c.mlp.max_epochs = o.mlp_epochs;
  c.mlp.patience = o.mlp_patience;
  c.mlp.learning_rate = o.mlp_learning_rate;
  c.iforest.n_trees = o.if_trees;
  c.iforest.subsample = o.if_subsample;
  return c;
}

// Rebuilds the held-out pool the bundle was not trained on.
Dataset test_pool(const Options& o, const ModelBundle& b) {
  const Dataset clean = load_clean(o, schema_from(o, &b));
  TrainConfig c;
  c.seed = b.seed;
  c.train_fraction = b.metadata.value("train_fraction", 0.7);
  return train_test_split(clean, c).second;
}

ModelBundle load_model(const Options& o) {
  if (o.model.empty()) throw UsageError("--model is required");
  return load_bundle(o.model);
}

double engine_theta(const Options& o, const ModelBundle& b) {
  if (o.theta >= 0.0) return o.theta;
  if (!b.theta) throw DataError("model has no tuned threshold; run tune-threshold or pass --theta");
  return *b.theta;
}

Engine make_engine(const Options& o, const ModelBundle& b, std::shared_ptr<SignalBus> bus = nullptr) {
  EngineConfig ec;
  ec.weights = b.weights;
  ec.theta = engine_theta(o, b);
  ec.seed = o.seed;
  return Engine(b.ensemble(), b.standardizer, ec, std::move(bus),
                o.decoys.empty() ? DecoyCatalog::defaults() : DecoyCatalog::load(o.decoys));
}

int cmd_gen_synthetic(const Options& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  SyntheticConfig c;
  c.n = o.n;
  c.attack_ratio = o.attack_ratio;
  c.shift = o.shift;
  c.seed = o.seed;
  write_file_atomic(o.out, dataset_to_csv(make_two_gaussian(c)));
  std::cout << "wrote " << o.n << " flows to " << o.out << " (seed " << o.seed << ")\n";
  return 0;
}

int cmd_train(const Options& o) {
  if (o.model.empty()) throw UsageError("--model is required");
  const Dataset clean = load_clean(o, schema_from(o));
  const TrainConfig cfg = train_config(o);
  TrainOutput t = train_bundle(clean, cfg);
  save_bundle(o.model, t.bundle);
  const auto& r = t.report;
  std::printf("train=%zu test=%zu resampled=%zu/%zu\n", r.train_size, r.test_size,
              r.balance.final_majority, r.balance.final_minority);
  std::printf("training accuracy: rf=%.4f mlp=%.4f gbt=%.4f (mlp epochs %d)\n", r.rf_accuracy,
              r.mlp_accuracy, r.gbt_accuracy, r.mlp_log.epochs_run);
  std::printf("model written to %s (seed %llu)\n", o.model.c_str(),
              static_cast<unsigned long long>(o.seed));
  return 0;
}

int cmd_tune(const Options& o) {
  ModelBundle b = load_model(o);
  const Dataset pool = test_pool(o, b);
  const ThresholdResult r =
      tune_bundle(b, pool, o.validation_fraction, ThresholdGrid{o.grid_start, o.grid_stop, o.grid_step});
  save_bundle(o.model, b);
  for (const auto& [t, f1] : r.curve) std::printf("theta=%.2f f1=%.4f\n", t, f1);
  std::printf("theta_opt=%.2f f1=%.4f\n", r.theta, r.f1);
  return 0;
}

int cmd_evaluate(const Options& o) {
  const ModelBundle b = load_model(o);
  const Dataset pool = test_pool(o, b);
  std::vector<std::string> notes;
  std::size_t n = o.sample_size;
  if (n > pool.size()) {
    notes.push_back("requested sample of " + std::to_string(n) + " exceeds the held-out pool; using all " +
                    std::to_string(pool.size()) + " flows");
    n = pool.size();
  }
  const Dataset sample = stratified_sample(pool, n, mix_seed(o.seed, kSampleStream));
  TimingAssignment timing;
  timing.rate = o.rate;
  timing.benign_sources = o.benign_sources;
  timing.seed = mix_seed(o.seed, kReplayStream);
  const auto events = events_from_dataset(sample, timing);

  Engine engine = make_engine(o, b);
  EvaluationOptions eo;
  eo.bootstrap = o.bootstrap > 0;
  eo.n_resamples = o.bootstrap;
  eo.level = o.level;
  eo.seed = mix_seed(o.seed, kBootstrapStream);
  ReplayResult rr = replay(engine, events, eo);
  EvaluationReport& rep = rr.report;

  json config = {{"data", o.data},
                 {"model", o.model},
                 {"sample_size", n},
                 {"rate", o.rate},
                 {"benign_sources", o.benign_sources},
                 {"bootstrap", o.bootstrap},
                 {"level", o.level},
                 {"cleaning", o.cleaning},
                 {"theta", engine.config().theta},
                 {"seed", o.seed}};
  rep.config.update(config);
  rep.config["config_hash"] = config_hash(config);
  rep.seeds["run"] = o.seed;
  rep.seeds["model"] = b.seed;
  rep.notes.push_back(timing_note(timing));
  rep.notes.push_back("threshold was tuned on a slice of the same held-out pool");
  for (auto& s : notes) rep.notes.push_back(s);

  const std::string text = report_to_text(rep);
  if (!o.report_json.empty()) write_file_atomic(o.report_json, report_to_json(rep).dump(2) + "\n");
  if (!o.report_text.empty()) write_file_atomic(o.report_text, text);
  std::cout << text << "seed " << o.seed << ", config hash " << rep.config["config_hash"].get<std::string>()
            << '\n';
  return 0;
}

Scenario scenario_from(const Options& o) {
  const auto cls = parse_profile_class(o.scenario_class);
  if (!cls) throw UsageError("unknown scenario class '" + o.scenario_class + "'");
  Scenario s;
  s.cls = *cls;
  switch (*cls) {
    case ProfileClass::kAutomated: s.mean_gap = 0.3, s.gap_std = 0.1; break;
    case ProfileClass::kRapid: s.mean_gap = 1.0, s.gap_std = 0.8; break;
    case ProfileClass::kDeliberate: s.mean_gap = 15.0, s.gap_std = 3.0; break;
    case ProfileClass::kStandard: s.mean_gap = 5.0, s.gap_std = 1.0; break;
  }
  if (o.tau >= 0.0) s.mean_gap = o.tau;
  if (o.sigma >= 0.0) s.gap_std = o.sigma;
  s.events = o.events;
  s.attack_mix = o.attack_mix;
  s.source = o.source;
  return s;
}

int cmd_simulate(const Options& o) {
  const Scenario s = scenario_from(o);
  check_scenario(s);
  const ModelBundle b = load_model(o);
  const Dataset pool = test_pool(o, b);
  FeaturePools pools;
  for (const auto& r : pool.records) (r.label ? pools.attack : pools.benign).append_row(r.features);
  Engine engine = make_engine(o, b);
  const auto outcomes = simulate_attacker(engine, s, pools, o.seed);
  std::ostringstream log;
  std::vector<int> trajectory;
  for (const auto& oc : outcomes) {
    log << outcome_to_json(oc).dump() << '\n';
    trajectory.push_back(oc.level);
  }
  if (o.out.empty()) {
    std::cout << log.str();
  } else {
    write_file_atomic(o.out, log.str());
  }
  std::cerr << "class=" << o.scenario_class << " events=" << outcomes.size()
            << " final_level=" << (trajectory.empty() ? kMinLevel : trajectory.back()) << '\n';
  return 0;
}

// Shared by live and profile-report: processes NDJSON events from a stream.
void run_events(Engine& engine, std::istream& in, std::ostream* outcomes) {
  std::string line;
  std::size_t lineno = 0, rejected = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto oc = engine.process(parse_event_json(line));
      if (oc && outcomes) *outcomes << outcome_to_json(*oc).dump() << '\n';
      if (!oc) std::cerr << "line " << lineno << ": event skipped (feature dimension)\n";
    } catch (const DataError& e) {
      ++rejected;
      std::cerr << "line " << lineno << ": " << e.what() << '\n';
    }
  }
  engine.bus().flush();
  if (rejected) std::cerr << rejected << " events rejected\n";
}

json profile_report(const Engine& engine) {
  json rows = json::array();
  for (const auto& p : engine.profiles().profiles()) {
    json row = profile_to_json(p, engine.profiles().config().min_observations);
    row["level"] = engine.escalation().level(p.source);
    rows.push_back(row);
  }
  return rows;
}

int cmd_live(const Options& o) {
  const ModelBundle b = load_model(o);
  auto bus = std::make_shared<SignalBus>();
  std::ofstream tap;
  if (!o.signals_out.empty()) {
    tap.open(o.signals_out);
    if (!tap) throw DataError("cannot open '" + o.signals_out + "' for writing");
    bus->set_tap(&tap);
  }
  Engine engine = make_engine(o, b, bus);
  run_events(engine, std::cin, &std::cout);
  bus->set_tap(nullptr);
  if (!o.profiles_out.empty()) write_file_atomic(o.profiles_out, profile_report(engine).dump(2) + "\n");
  return 0;
}

int cmd_profile_report(const Options& o) {
  const ModelBundle b = load_model(o);
  Engine engine = make_engine(o, b);
  if (o.events_file.empty() || o.events_file == "-") {
    run_events(engine, std::cin, nullptr);
  } else {
    std::ifstream in(o.events_file);
    if (!in) throw DataError("cannot open '" + o.events_file + "'");
    run_events(engine, in, nullptr);
  }
  const std::string text = profile_report(engine).dump(2) + "\n";
  if (o.out.empty()) {
    std::cout << text;
  } else {
    write_file_atomic(o.out, text);
  }
  return 0;
}

void data_options(CLI::App* c, Options& o) {
  c->add_option("--data", o.data, "Flow CSV");
  c->add_option("--schema", o.schema, "Feature schema file, one column name per line");
  c->add_option("--label-column", o.label_column, "Label column name")->capture_default_str();
  c->add_option("--cleaning", o.cleaning, "Non-finite handling: drop_row or impute_zero")
      ->check(CLI::IsMember({"drop_row", "impute_zero"}))
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Adaptive intrusion detection and deception engine"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_config("--config", "", "Key-value configuration file (flags override it)");
  app.add_option("--seed", o.seed, "Master seed")->envname("MIRAGE_SEED")->capture_default_str();

  auto* gen = app.add_subcommand("gen-synthetic", "Write a two-Gaussian synthetic flow CSV");
  gen->add_option("--out", o.out, "Output CSV")->required();
  gen->add_option("--n", o.n, "Number of flows")->capture_default_str();
  gen->add_option("--attack-ratio", o.attack_ratio, "Attack share")->capture_default_str();
  gen->add_option("--shift", o.shift, "Attack mean shift")->capture_default_str();

  auto* train = app.add_subcommand("train", "Train the four detectors and write a model file");
  data_options(train, o);
  train->add_option("--model", o.model, "Output model file")->required();
  train->add_option("--train-fraction", o.train_fraction)->capture_default_str();
  train->add_option("--weights", o.weights, "Ensemble weights rf nn xgb anom")->expected(4);
  train->add_option("--smote-ratio", o.smote_ratio)->capture_default_str();
  train->add_option("--under-ratio", o.under_ratio)->capture_default_str();
  train->add_option("--k-neighbors", o.k_neighbors)->capture_default_str();
  train->add_option("--rf-trees", o.rf_trees)->capture_default_str();
  train->add_option("--rf-depth", o.rf_depth)->capture_default_str();
  train->add_option("--gbt-trees", o.gbt_trees)->capture_default_str();
  train->add_option("--gbt-learning-rate", o.gbt_learning_rate)->capture_default_str();
  train->add_option("--gbt-depth", o.gbt_depth)->capture_default_str();
  train->add_option("--mlp-hidden", o.mlp_hidden)->expected(1, 8);
  train->add_option("--mlp-epochs", o.mlp_epochs)->capture_default_str();
  train->add_option("--mlp-patience", o.mlp_patience)->capture_default_str();
  train->add_option("--mlp-learning-rate", o.mlp_learning_rate)->capture_default_str();
  train->add_option("--if-trees", o.if_trees)->capture_default_str();
  train->add_option("--if-subsample", o.if_subsample)->capture_default_str();

  auto* tune = app.add_subcommand("tune-threshold", "Pick the F1-optimal threshold and store it in the model");
  data_options(tune, o);
  tune->add_option("--model", o.model, "Model file, updated in place")->required();
  tune->add_option("--validation-fraction", o.validation_fraction)->capture_default_str();
  tune->add_option("--grid-start", o.grid_start)->capture_default_str();
  tune->add_option("--grid-stop", o.grid_stop, "Exclusive upper end")->capture_default_str();
  tune->add_option("--grid-step", o.grid_step)->capture_default_str();

  auto* eval = app.add_subcommand("evaluate", "Replay a held-out sample and write reports");
  data_options(eval, o);
  eval->add_option("--model", o.model)->required();
  eval->add_option("--sample-size", o.sample_size)->capture_default_str();
  eval->add_option("--bootstrap", o.bootstrap, "Resamples, 0 disables")->capture_default_str();
  eval->add_option("--level", o.level, "Confidence level")->capture_default_str();
  eval->add_option("--rate", o.rate, "Synthetic arrival rate, events/s")->capture_default_str();
  eval->add_option("--benign-sources", o.benign_sources)->capture_default_str();
  eval->add_option("--report-json", o.report_json);
  eval->add_option("--report-text", o.report_text);
  eval->add_option("--theta", o.theta, "Override the tuned threshold");
  eval->add_option("--decoys", o.decoys, "Decoy catalog JSON");

  auto* sim = app.add_subcommand("simulate-attacker", "Drive a synthetic source through the engine");
  data_options(sim, o);
  sim->add_option("--model", o.model)->required();
  sim->add_option("--class", o.scenario_class, "automated, rapid, deliberate or standard")
      ->capture_default_str();
  sim->add_option("--tau", o.tau, "Mean inter-request gap, s");
  sim->add_option("--sigma", o.sigma, "Gap standard deviation, s");
  sim->add_option("--events", o.events)->capture_default_str();
  sim->add_option("--attack-mix", o.attack_mix)->capture_default_str();
  sim->add_option("--source", o.source)->capture_default_str();
  sim->add_option("--out", o.out, "Outcome log (NDJSON); stdout if omitted");
  sim->add_option("--theta", o.theta);
  sim->add_option("--decoys", o.decoys);

  auto* live = app.add_subcommand("live", "Process NDJSON events from stdin, write outcomes to stdout");
  live->add_option("--model", o.model)->required();
  live->add_option("--signals-out", o.signals_out, "Mirror bus signals as NDJSON");
  live->add_option("--profiles-out", o.profiles_out, "Profile report written at end of input");
  live->add_option("--theta", o.theta);
  live->add_option("--decoys", o.decoys);

  auto* prof = app.add_subcommand("profile-report", "Profile every source in an NDJSON event file");
  prof->add_option("--model", o.model)->required();
  prof->add_option("--events", o.events_file, "NDJSON events, - for stdin");
  prof->add_option("--out", o.out);
  prof->add_option("--theta", o.theta);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_gen_synthetic(o);
    if (*train) return cmd_train(o);
    if (*tune) return cmd_tune(o);
    if (*eval) return cmd_evaluate(o);
    if (*sim) return cmd_simulate(o);
    if (*live) return cmd_live(o);
    if (*prof) return cmd_profile_report(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
