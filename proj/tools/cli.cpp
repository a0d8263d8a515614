#include "cli.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"
#include "manifest.hpp"
#include "portirl/csv.hpp"
#include "portirl/data_pipeline.hpp"
#include "portirl/forecaster.hpp"
#include "portirl/lstm_ae.hpp"
#include "portirl/maxent_irl.hpp"
#include "portirl/synthetic_expert.hpp"
#include "portirl/toy_mdp.hpp"
#include "portirl/version.hpp"

namespace fs = std::filesystem;

namespace portirl::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Settings {
  std::string config_path;
  std::uint64_t seed = 7;
  std::string out = "portirl-out";

  int vessels = 40;
  int horizon = 2000;
  int size_classes = 3;
  int carriers = 5;
  double arrival_prob = 0.26;
  std::vector<int> service;

  std::string visits;
  std::string registry;
  int window_hours = 8;
  int prune_windows = 21;

  double split = 0.7;
  int ae_epochs = 40;
  int ae_hidden = 64;
  int ae_bottleneck = 32;
  int ae_seq_len = 16;
  int ae_batch = 8;
  double ae_lr = 0.05;

  bool temporal = true;
  double irl_lr = 0.1;
  int irl_iterations = 3000;
  std::string reward_kind = "linear";
  int reward_hidden = 32;

  bool include_nothing = false;
  int departure_horizon = 0;

  int check_samples = 256;
};

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return {};
  s = s.substr(b, e - b + 1);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) s = s.substr(1, s.size() - 2);
  return s;
}

std::map<std::string, std::string> read_flat_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#' || t.front() == ';') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return kv;
}

std::optional<std::string> find_config_arg(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a path");
      return args[i + 1];
    }
    if (args[i].starts_with("--config=")) return args[i].substr(9);
  }
  return std::nullopt;
}

fs::path require(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw std::runtime_error("missing " + what + ": " + p.string());
  return p;
}

// One command invocation: tracks hashed inputs and outputs for the manifest.
class Run {
 public:
  Run(const Settings& s, std::string command)
      : out(s.out), seed(s.seed), command_(std::move(command)), manifest_(out) {}

  fs::path input(const fs::path& p) {
    rec_.inputs[manifest_.key_for(p)] = sha256_file(p);
    return p;
  }
  void inputs_in(const fs::path& dir) {
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file()) input(e.path());
  }
  fs::path output(const fs::path& p) {
    pending_.push_back(p);
    return p;
  }
  void set_config(std::map<std::string, std::string> cfg) { rec_.config = std::move(cfg); }

  void commit() {
    for (const auto& p : pending_) rec_.outputs[manifest_.key_for(p)] = sha256_file(p);
    rec_.seed = seed;
    manifest_.load();
    manifest_.record(command_, rec_);
    manifest_.save();
  }

  fs::path out;
  std::uint64_t seed;

 private:
  std::string command_;
  RunManifest manifest_;
  CommandRecord rec_;
  std::vector<fs::path> pending_;
};

VesselRegistry load_registry_or_fail(Run& run, const fs::path& path, std::ostream& err) {
  auto rl = load_registry(run.input(require(path, "registry file")));
  for (const auto& d : rl.diagnostics) err << path.string() << ":" << d.line << ": " << d.message << '\n';
  if (!rl.diagnostics.empty()) throw DataError("registry has " + std::to_string(rl.diagnostics.size()) + " bad rows");
  return std::move(rl.registry);
}

std::vector<Trajectory> load_trajectories(Run& run) {
  const fs::path dir = require(run.out / "trajectories", "trajectory directory (run ingest first)");
  run.inputs_in(dir);
  auto trajs = read_trajectory_dir(dir);
  if (trajs.empty()) throw DataError("no trajectory segments in " + dir.string());
  return trajs;
}

fs::path registry_path(const Settings& s) { return s.registry.empty() ? fs::path(s.out) / "registry.csv" : fs::path(s.registry); }

void cmd_synth(const Settings& s, Run& run, std::ostream& out) {
  SyntheticConfig c;
  c.fleet.n_vessels = s.vessels;
  c.fleet.size_classes = s.size_classes;
  c.fleet.carriers = s.carriers;
  c.fleet.seed = s.seed;
  c.rule.service_windows = s.service;
  c.horizon = s.horizon;
  c.arrival_probability = s.arrival_prob;
  c.seed = s.seed;
  c.window_hours = s.window_hours;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto ds = generate_dataset(c);
  write_visits(run.output(run.out / "visits.csv"), ds.visits);
  write_registry(run.output(run.out / "registry.csv"), ds.registry);
  write_arrivals(run.output(run.out / "arrivals.csv"), ds.timeline);
  out << "synth: " << ds.visits.size() << " visits over " << ds.timeline.states.size() << " windows\n";
}

void write_stats(Run& run, const std::vector<Trajectory>& trajs, int window_hours, std::ostream& err) {
  const fs::path dir = run.out / "stats";
  const auto st = emit_stats(trajs, dir, window_hours);
  for (const auto& w : st.warnings) err << "warning: " << w << '\n';
  run.output(dir / "action_frequencies.csv");
  run.output(dir / "stay_durations.csv");
}

void cmd_ingest(const Settings& s, Run& run, std::ostream& out, std::ostream& err) {
  const fs::path visits_path = s.visits.empty() ? run.out / "visits.csv" : fs::path(s.visits);
  const VesselRegistry registry = load_registry_or_fail(run, registry_path(s), err);
  auto vl = load_visits(run.input(require(visits_path, "visits file")));
  for (const auto& d : vl.diagnostics) err << visits_path.string() << ":" << d.line << ": " << d.message << '\n';
  for (const auto& w : vl.warnings) err << "warning: " << w << '\n';
  if (!vl.diagnostics.empty()) throw DataError("visits file has " + std::to_string(vl.diagnostics.size()) + " bad rows");

  WindowingConfig wc;
  wc.window_hours = s.window_hours;
  wc.empty_span_prune_windows = s.prune_windows;
  const Timeline timeline = discretize(vl.records, registry, wc);
  std::vector<Trajectory> trajs;
  int id = 0;
  for (const auto& seg : prune_empty_spans(timeline, wc)) {
    if (seg.states.size() < 2) continue;
    Trajectory t = infer_actions(seg.states, id++);
    if (const auto bad = replay_mismatch(t)) throw DataError("segment " + std::to_string(t.id) + ": " + *bad);
    trajs.push_back(std::move(t));
  }
  if (trajs.empty()) throw DataError("no trajectory segments after pruning");
  write_trajectory_dir(run.out / "trajectories", trajs);
  for (const auto& t : trajs) {
    char name[32];
    std::snprintf(name, sizeof name, "segment_%04d.csv", t.id);
    run.output(run.out / "trajectories" / name);
  }
  write_stats(run, trajs, s.window_hours, err);
  std::size_t windows = 0;
  for (const auto& t : trajs) windows += t.states.size();
  out << "ingest: " << trajs.size() << " segments, " << windows << " windows\n";
}

void cmd_stats(const Settings& s, Run& run, std::ostream& out, std::ostream& err) {
  const auto trajs = load_trajectories(run);
  write_stats(run, trajs, s.window_hours, err);
  const auto h = action_histogram(trajs);
  out << "stats: " << h.total_non_nothing() << " vessel actions\n";
}

void cmd_train_ae(const Settings& s, Run& run, std::ostream& out, std::ostream& err) {
  const VesselRegistry registry = load_registry_or_fail(run, registry_path(s), err);
  const auto trajs = load_trajectories(run);
  const WindowIndex split = chronological_split(trajs, s.split);
  LstmAeConfig c;
  c.hidden_dim = s.ae_hidden;
  c.bottleneck_dim = s.ae_bottleneck;
  c.sequence_len = s.ae_seq_len;
  c.learning_rate = s.ae_lr;
  c.epochs = s.ae_epochs;
  c.batch_size = s.ae_batch;
  c.seed = s.seed;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto scaling = FeatureScaling::from_registry(registry, c.staytime_cap);
  const auto samples = make_sequences(trajs, registry, c, scaling, split);
  if (samples.empty()) throw DataError("no training windows before the split window " + std::to_string(split));
  const auto weights = LossWeights::defaults();
  const auto result = train(samples, c, scaling, weights);
  save_checkpoint(run.output(run.out / "ae_checkpoint.json"), result.params, weights);
  {
    std::ofstream log(run.output(run.out / "ae_training.csv"));
    log << "epoch,loss\n0," << csv::format_double(result.initial_loss) << '\n';
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e)
      log << e + 1 << ',' << csv::format_double(result.epoch_loss[e]) << '\n';
  }
  if (result.diverged) err << "warning: training diverged; kept the last finite parameters\n";
  out << "train-ae: " << samples.size() << " sequences, loss " << result.initial_loss << " -> "
      << (result.epoch_loss.empty() ? result.initial_loss : result.epoch_loss.back()) << '\n';
}

void cmd_extract(const Settings& s, Run& run, std::ostream& out, std::ostream& err) {
  const VesselRegistry registry = load_registry_or_fail(run, registry_path(s), err);
  const auto trajs = load_trajectories(run);
  const TemporalEncoder encoder(
      load_checkpoint(run.input(require(run.out / "ae_checkpoint.json", "autoencoder checkpoint (run train-ae first)"))));
  const auto features = extract_features(encoder, trajs, registry);
  write_feature_file(run.output(run.out / "temporal_features.csv"), features);
  out << "extract: " << features.size() << " windows x " << encoder.dimension() << " features\n";
}

void cmd_train_irl(const Settings& s, Run& run, std::ostream& out, std::ostream& err) {
  const VesselRegistry registry = load_registry_or_fail(run, registry_path(s), err);
  const auto trajs = load_trajectories(run);
  const WindowIndex split = chronological_split(trajs, s.split);
  TemporalFeatureMap features;
  int temporal_dim = 0;
  if (s.temporal) {
    features = read_feature_file(
        run.input(require(run.out / "temporal_features.csv", "temporal features (run extract first)")));
    temporal_dim = features.empty() ? 0 : static_cast<int>(features.begin()->second.size());
  }
  const SlotContextBuilder builder(registry, FeatureScaling::from_registry(registry), temporal_dim);
  const auto data =
      build_factored_dataset(trajs, builder, features, std::numeric_limits<WindowIndex>::min(), split);
  if (data.decisions.empty()) throw DataError("no vessel decisions before the split window " + std::to_string(split));

  IrlConfig cfg = IrlConfig::factored();
  cfg.learning_rate = s.irl_lr;
  cfg.iterations = s.irl_iterations;
  RewardParams init;
  if (s.reward_kind == "linear") init = RewardParams::linear(builder.dimension());
  else if (s.reward_kind == "mlp") init = RewardParams::mlp(builder.dimension(), s.reward_hidden, s.seed);
  else throw UsageError("reward kind must be linear or mlp");

  const auto fit_result = fit(data, init, cfg);
  RewardCheckpoint cp{cfg, init, builder};
  cp.params.theta = fit_result.theta;
  save_reward(run.output(run.out / "reward.json"), cp);
  write_training_log(run.output(run.out / "irl_training.csv"), fit_result.log);
  if (fit_result.diverged) err << "warning: fit diverged; saved the best iterate\n";
  const auto& last = fit_result.log.back();
  out << "train-irl: " << data.decisions.size() << " decisions, L = " << last.log_likelihood << " (best at iteration "
      << fit_result.best_iteration << ")\n";
}

std::unique_ptr<RewardPolicy> load_policy(Run& run) {
  RewardCheckpoint cp =
      load_reward(run.input(require(run.out / "reward.json", "reward checkpoint (run train-irl first)")));
  std::optional<TemporalEncoder> encoder;
  if (cp.builder.temporal_dim() > 0)
    encoder.emplace(load_checkpoint(
        run.input(require(run.out / "ae_checkpoint.json", "autoencoder checkpoint (run train-ae first)"))));
  return std::make_unique<RewardPolicy>(std::move(cp.params), std::move(cp.builder), std::move(encoder));
}

void cmd_predict(const Settings& s, Run& run, std::ostream& out) {
  const auto policy = load_policy(run);
  const auto trajs = load_trajectories(run);
  const WindowIndex split = chronological_split(trajs, s.split);
  ForecastConfig fc;
  fc.seed = s.seed;
  std::mt19937_64 rng(fc.seed);
  std::ofstream csv(run.output(run.out / "predictions.csv"));
  csv << "trajectory_id,window,slot,imo,predicted_action,probability,true_action\n";
  std::size_t rows = 0;
  for (const auto& t : trajs) {
    auto p = policy->clone();
    for (std::size_t k = 0; k < t.steps(); ++k) {
      const auto& st = t.states[k];
      if (t.states[k + 1].window < split) {
        p->observe(st);
        continue;
      }
      const auto dists = p->decide(st);
      const auto ja = decide_joint(st, dists, fc, rng);
      for (int i = 0; i < kSlotCount; ++i) {
        if (!st.occupied(i)) continue;
        const auto pos = static_cast<std::size_t>(action_position(ja[i]));
        csv << t.id << ',' << st.window << ',' << i << ',' << st.slots[static_cast<std::size_t>(i)] << ','
            << action_index(ja[i]) << ',' << csv::format_double(dists[static_cast<std::size_t>(i)][pos]) << ','
            << action_index(t.actions[k][i]) << '\n';
        ++rows;
      }
    }
  }
  out << "predict: " << rows << " slot predictions\n";
}

std::string percent(const Accuracy& a) {
  const auto v = a.value();
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * *v);
  return buf;
}

void cmd_evaluate(const Settings& s, Run& run, std::ostream& out) {
  const auto policy = load_policy(run);
  const auto trajs = load_trajectories(run);
  EvaluationConfig ec;
  ec.split_window = chronological_split(trajs, s.split);
  ec.include_nothing = s.include_nothing;
  ec.forecast.seed = s.seed;
  ec.departure_horizon = s.departure_horizon;
  const auto rep = evaluate(trajs, *policy, ec);
  write_report(run.output(run.out / "report.json"), rep, ec);
  write_congestion_csv(run.output(run.out / "congestion_timeline.csv"), rep);
  write_departure_csv(run.output(run.out / "departures.csv"), rep);
  out << "evaluate: action " << percent(rep.action) << " (majority " << percent(rep.action_baseline)
      << "), congestion " << percent(rep.congestion) << " (majority " << percent(rep.congestion_baseline)
      << "), leave " << percent(rep.leave) << '\n';
}

void cmd_gradcheck(const Settings& s, Run& run, std::ostream& out) {
  constexpr double kTolerance = 1e-5;
  SyntheticConfig sc;
  sc.horizon = 60;
  sc.seed = s.seed;
  sc.fleet.seed = s.seed;
  sc.arrival_probability = 0.3;
  const auto ds = generate_dataset(sc);
  Trajectory t;
  t.states = ds.timeline.states;
  t.actions = ds.actions;
  LstmAeConfig c;
  c.hidden_dim = 8;
  c.bottleneck_dim = 4;
  c.sequence_len = 6;
  const auto scaling = FeatureScaling::from_registry(ds.registry, c.staytime_cap);
  const auto samples = make_sequences({t}, ds.registry, c, scaling, std::numeric_limits<WindowIndex>::max());
  if (samples.empty()) throw std::runtime_error("gradient check needs at least one sequence");
  const auto params = LstmAeParams::random(c, scaling, s.seed);
  const auto weights = LossWeights::defaults();
  const auto count = static_cast<std::size_t>(s.check_samples);
  const auto ae = gradient_check(params, samples.front(), weights, 1e-5, count, s.seed);
  const auto ae_fault = gradient_check(params, samples.front(), weights, 1e-5, count, s.seed, GradientFault::ForgetGate);

  const ToyMdp toy = enumerate_toy_mdp({});
  std::mt19937_64 rng(s.seed);
  std::normal_distribution<double> gauss(0.0, 0.5);
  std::vector<double> theta(static_cast<std::size_t>(toy.tabular.feature_dim));
  for (double& v : theta) v = gauss(rng);
  IrlConfig ic;
  const auto sv = soft_value_iteration(toy.tabular, theta, ic);
  const auto demos = sample_demonstrations(toy.tabular, sv, 50, s.seed);
  const auto irl = gradient_check(toy.tabular, demos, theta, ic);

  const bool passed = ae.max_relative_error < kTolerance && irl.max_relative_error < kTolerance;
  nlohmann::ordered_json j;
  j["tolerance"] = kTolerance;
  j["lstm_ae"] = {{"checked", ae.checked},
                  {"max_relative_error", ae.max_relative_error},
                  {"forget_gate_fault_max_relative_error", ae_fault.max_relative_error}};
  j["irl"] = {{"checked", irl.checked}, {"max_relative_error", irl.max_relative_error}};
  j["passed"] = passed;
  std::ofstream(run.output(run.out / "gradcheck.json")) << j.dump(2) << '\n';
  out << "gradcheck: lstm-ae " << ae.max_relative_error << ", irl " << irl.max_relative_error
      << (passed ? " (pass)\n" : " (FAIL)\n");
  if (!passed) {
    run.commit();
    throw std::runtime_error("gradient check exceeded tolerance");
  }
}

std::string value_string(const CLI::Option* opt) {
  if (opt->count() == 0) return opt->get_default_str();
  std::string joined;
  for (const auto& r : opt->results()) joined += (joined.empty() ? "" : ",") + r;
  return joined;
}

std::map<std::string, std::string> snapshot(const CLI::App* sub) {
  std::map<std::string, std::string> cfg;
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name.empty()) continue;
    cfg[name] = value_string(opt);
  }
  return cfg;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Settings s;
  CLI::App app{"Port scheduling imitation: synthetic data, ingestion, temporal features, IRL and evaluation",
               "portirl"};
  app.set_version_flag("--version", std::string(kVersionString));
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();
  app.add_option("--config", s.config_path, "Flat key=value file with option defaults");
  app.add_option("--seed", s.seed, "Random seed")->capture_default_str();
  app.add_option("--out", s.out, "Output directory")->capture_default_str();

  auto* synth = app.add_subcommand("synth", "Generate a synthetic port dataset");
  synth->add_option("--vessels", s.vessels, "Fleet size")->check(CLI::PositiveNumber);
  synth->add_option("--horizon", s.horizon, "Windows with arrivals")->check(CLI::NonNegativeNumber);
  synth->add_option("--size-classes", s.size_classes)->check(CLI::PositiveNumber);
  synth->add_option("--carriers", s.carriers)->check(CLI::PositiveNumber);
  synth->add_option("--arrival-prob", s.arrival_prob, "Arrival probability per free incoming slot")
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("--service", s.service, "Berth service windows per size class")->delimiter(',');
  synth->add_option("--window-hours", s.window_hours)->check(CLI::PositiveNumber);

  auto* ingest = app.add_subcommand("ingest", "Discretize visits into trajectories");
  ingest->add_option("--visits", s.visits, "Visits CSV (default OUT/visits.csv)");
  ingest->add_option("--registry", s.registry, "Registry CSV (default OUT/registry.csv)");
  ingest->add_option("--window-hours", s.window_hours)->check(CLI::PositiveNumber);
  ingest->add_option("--prune-windows", s.prune_windows, "Empty run length that splits segments")
      ->check(CLI::PositiveNumber);

  auto* stats = app.add_subcommand("stats", "Action and stay-duration histograms");
  stats->add_option("--window-hours", s.window_hours)->check(CLI::PositiveNumber);

  auto* train_ae = app.add_subcommand("train-ae", "Train the LSTM autoencoder");
  train_ae->add_option("--registry", s.registry);
  train_ae->add_option("--split", s.split, "Chronological training fraction")->check(CLI::Range(0.0, 1.0));
  train_ae->add_option("--epochs", s.ae_epochs)->check(CLI::NonNegativeNumber);
  train_ae->add_option("--hidden", s.ae_hidden)->check(CLI::PositiveNumber);
  train_ae->add_option("--bottleneck", s.ae_bottleneck)->check(CLI::PositiveNumber);
  train_ae->add_option("--seq-len", s.ae_seq_len)->check(CLI::PositiveNumber);
  train_ae->add_option("--batch", s.ae_batch)->check(CLI::PositiveNumber);
  train_ae->add_option("--lr", s.ae_lr)->check(CLI::NonNegativeNumber);

  auto* extract = app.add_subcommand("extract", "Compute temporal features for every window");
  extract->add_option("--registry", s.registry);

  auto* train_irl = app.add_subcommand("train-irl", "Fit the reward by maximum-entropy IRL");
  train_irl->add_option("--registry", s.registry);
  train_irl->add_option("--split", s.split)->check(CLI::Range(0.0, 1.0));
  train_irl->add_flag("--temporal,!--no-temporal", s.temporal, "Use temporal features");
  train_irl->add_option("--lr", s.irl_lr)->check(CLI::NonNegativeNumber);
  train_irl->add_option("--iterations", s.irl_iterations)->check(CLI::NonNegativeNumber);
  train_irl->add_option("--reward", s.reward_kind, "linear or mlp")->check(CLI::IsMember({"linear", "mlp"}));
  train_irl->add_option("--reward-hidden", s.reward_hidden)->check(CLI::PositiveNumber);

  auto* predict = app.add_subcommand("predict", "Predict actions on the held-out windows");
  predict->add_option("--split", s.split)->check(CLI::Range(0.0, 1.0));

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score action, congestion and departure forecasts");
  evaluate_cmd->add_option("--split", s.split)->check(CLI::Range(0.0, 1.0));
  evaluate_cmd->add_flag("--include-nothing", s.include_nothing, "Count empty-slot Nothing actions");
  evaluate_cmd->add_option("--departure-horizon", s.departure_horizon, "0 = rest of the segment")
      ->check(CLI::NonNegativeNumber);

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gradcheck->add_option("--samples", s.check_samples)->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    if (const auto cfg_path = find_config_arg(args)) {
      for (const auto& [key, value] : read_flat_config(*cfg_path)) {
        bool used = false;
        if (auto* o = app.get_option_no_throw("--" + key); o && key != "config") {
          o->default_val(value);
          used = true;
        }
        for (auto* sub : app.get_subcommands({})) {
          if (auto* o = sub->get_option_no_throw("--" + key)) {
            o->default_val(value);
            used = true;
          }
        }
        if (!used) throw UsageError("unknown config key '" + key + "'");
      }
    }
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  const CLI::App* sub = app.get_subcommands().front();
  try {
    fs::create_directories(s.out);
    Run r(s, sub->get_name());
    auto cfg = snapshot(sub);
    r.set_config(cfg);
    const std::string name = sub->get_name();
    if (name == "synth") cmd_synth(s, r, out);
    else if (name == "ingest") cmd_ingest(s, r, out, err);
    else if (name == "stats") cmd_stats(s, r, out, err);
    else if (name == "train-ae") cmd_train_ae(s, r, out, err);
    else if (name == "extract") cmd_extract(s, r, out, err);
    else if (name == "train-irl") cmd_train_irl(s, r, out, err);
    else if (name == "predict") cmd_predict(s, r, out);
    else if (name == "evaluate") cmd_evaluate(s, r, out);
    else if (name == "gradcheck") cmd_gradcheck(s, r, out);
    r.commit();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what();
    if (e.window()) err << " (window " << *e.window() << ")";
    err << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace portirl::cli
