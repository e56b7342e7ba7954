#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <ostream>
#include <set>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "scout/checkpoint.hpp"
#include "scout/errors.hpp"
#include "scout/logdet.hpp"
#include "scout/metrics.hpp"

namespace scout::cli {

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr double kReferenceVariance = 3.297e-3;

template <typename C, typename F>
void visit_fields(C& c, F&& f) {
  f("nodes", c.nodes);
  f("density", c.density);
  f("sem", c.sem);
  f("noise", c.noise);
  f("noise_param1", c.noise_param1);
  f("noise_param2", c.noise_param2);
  f("intervention", c.intervention);
  f("shift", c.shift);
  f("scale", c.scale);
  f("alpha", c.alpha);
  f("hard_shift", c.hard_shift);
  f("samples", c.samples);
  f("design", c.design);
  f("max_targets", c.max_targets);
  f("cycles", c.cycles);
  f("lipschitz", c.lipschitz);
  f("trials", c.trials);
  f("epochs", c.epochs);
  f("batch_size", c.batch_size);
  f("lr", c.lr);
  f("lambda_graph", c.lambda_graph);
  f("lambda_target", c.lambda_target);
  f("tau_graph", c.tau_graph);
  f("tau_target", c.tau_target);
  f("poisson_mean", c.poisson_mean);
  f("logdet", c.logdet);
  f("activation", c.activation);
  f("precondition", c.precondition);
  f("checkpoint_every", c.checkpoint_every);
  f("test_fraction", c.test_fraction);
  f("kl_bins", c.kl_bins);
  f("draws", c.draws);
  f("zero", c.zero);
  f("data", c.data);
  f("truth", c.truth);
  f("known_targets", c.known_targets);
  f("checkpoint", c.checkpoint);
  f("output_dir", c.output_dir);
  f("seed", c.seed);
}

template <typename T>
nlohmann::json field_to_json(const T& v) {
  return nlohmann::json(v);
}
template <typename T>
nlohmann::json field_to_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <typename T>
void field_from_json(const nlohmann::json& j, T& v) {
  v = j.get<T>();
}
template <typename T>
void field_from_json(const nlohmann::json& j, std::optional<T>& v) {
  if (j.is_null()) {
    v.reset();
  } else {
    v = j.get<T>();
  }
}

std::filesystem::path output_path(const RunConfig& c, const std::string& name) {
  return std::filesystem::path(c.output_dir) / name;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create directory '" + dir.string() + "': " + ec.message());
}

void write_run_meta(const RunConfig& c, const std::string& command) {
  ensure_dir(c.output_dir);
  nlohmann::json meta;
  meta["command"] = command;
  meta["config"] = nlohmann::json::parse(to_json(c));
  meta["seed"] = c.seed;
  meta["version"] = kVersion;
  write_text_file(output_path(c, "run_meta.json").string(), meta.dump(2) + "\n");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

// ---- subcommands ---------------------------------------------------------

int cmd_gen(const RunConfig& c, std::ostream& out) {
  write_run_meta(c, "gen");
  for (int t = 0; t < c.trials; ++t) {
    const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(t);
    std::filesystem::path dir(c.output_dir);
    if (c.trials > 1) dir /= "trial_" + std::to_string(t);
    ensure_dir(dir);
    const Dataset data = generate(c, seed);
    write_dataset_csv((dir / "data.csv").string(), data);
    write_truth_json((dir / "truth.json").string(), *data.truth);
    out << "trial " << t << ": d=" << data.d << " K=" << data.num_experiments << " rows=" << data.rows()
        << " edges=" << data.truth->graph.adjacency().sum()
        << " cycles=" << count_simple_cycles(data.truth->graph, 1000000) << " -> " << dir.string() << "\n";
  }
  return 0;
}

Dataset load_training_data(const RunConfig& c) {
  if (c.data.empty()) throw ConfigError("--data is required");
  Dataset data = read_dataset_csv(c.data);
  if (!c.truth.empty()) {
    Truth truth = read_truth_json(c.truth);
    if (truth.graph.size() != data.d) throw ConfigError("truth graph does not match the data dimension");
    if (truth.targets.rows() != data.num_experiments) {
      throw ConfigError("truth target matrix does not match the number of experiments");
    }
    data.truth = std::move(truth);
    data.validate();
  }
  return data;
}

int cmd_train(const RunConfig& c, std::ostream& out, std::ostream& err) {
  write_run_meta(c, "train");
  Dataset data = load_training_data(c);
  if (c.test_fraction > 0) data = split_dataset(data, c.test_fraction, Rng(c.seed)).first;

  TrainConfig tc = c.train_config();
  if (!c.known_targets.empty()) tc.known_targets = read_truth_json(c.known_targets).targets;

  const std::string extra = nlohmann::json{{"run", nlohmann::json::parse(to_json(c))}}.dump();
  TrainCallbacks callbacks;
  callbacks.on_epoch = [&](const EpochMetrics& m, const ModelState& state) {
    if (c.checkpoint_every > 0 && m.epoch % c.checkpoint_every == 0 && m.epoch != tc.epochs) {
      write_checkpoint(output_path(c, "checkpoint_epoch_" + std::to_string(m.epoch) + ".json").string(),
                       {state, tc.model, m.epoch, extra});
    }
  };
  const TrainResult result = train(data, tc, callbacks);
  write_checkpoint(output_path(c, "checkpoint.json").string(),
                   {result.state, tc.model, result.epochs_completed, extra});
  write_text_file(output_path(c, "metrics.csv").string(), metrics_to_csv(result.metrics));
  if (result.diverged) {
    err << "training stopped: " << result.diagnostics << "\n"
        << "last good state written to " << output_path(c, "checkpoint.json").string() << "\n";
    return 3;
  }
  out << "trained " << result.epochs_completed << " epochs";
  if (!result.metrics.empty()) {
    const EpochMetrics& last = result.metrics.back();
    out << ", final loss " << fmt(last.mean_loss);
    if (last.graph_auprc) out << ", graph AUPRC " << fmt(*last.graph_auprc);
    if (last.target_auprc) out << ", target AUPRC " << fmt(*last.target_auprc);
  }
  out << "\n";
  return 0;
}

std::optional<double> kl_summary(const Dataset& data, const Truth& truth, int bins) {
  if (!truth.sem || !truth.spec) return std::nullopt;
  std::vector<Eigen::MatrixXd> per_experiment;
  Eigen::Index n = 0;
  for (int k = 0; k < data.num_experiments; ++k) {
    per_experiment.push_back(data.experiment_rows(k));
    n = std::max(n, per_experiment.back().rows());
  }
  if (n == 0) return std::nullopt;
  per_experiment.erase(std::remove_if(per_experiment.begin(), per_experiment.end(),
                                      [](const Eigen::MatrixXd& m) { return m.rows() == 0; }),
                       per_experiment.end());
  InterventionSpec observational = *truth.spec;
  observational.kind = InterventionKind::None;
  observational.targets = {NodeSet{}};
  GenerateOptions options;
  options.samples_per_experiment = static_cast<int>(n);
  const Dataset reference =
      generate_dataset(*truth.sem, observational, options, Rng(truth.seed).substream("kl-reference"));
  return histogram_kl(per_experiment, reference.x, bins).mean;
}

int cmd_eval(const RunConfig& c, std::ostream& out) {
  write_run_meta(c, "eval");
  if (c.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  if (c.truth.empty() && c.data.empty()) throw ConfigError("eval needs --truth and/or --data");
  const Checkpoint cp = read_checkpoint(c.checkpoint);
  EvalReport report;
  std::optional<Truth> truth;
  if (!c.truth.empty()) {
    truth = read_truth_json(c.truth);
    if (truth->graph.size() != cp.state.d) throw ConfigError("truth graph does not match the checkpoint");
    if (truth->graph.adjacency().sum() > 0) {
      report.pr_curve = graph_pr_curve(cp.state.edge_probabilities(), truth->graph);
      report.graph_auprc = report.pr_curve.area;
    }
    if (truth->targets.rows() == cp.state.num_experiments && truth->targets.cols() == cp.state.d &&
        truth->targets.sum() > 0) {
      report.target_auprc = target_recovery(cp.state.target_probabilities(), truth->targets);
    }
  }
  if (!c.data.empty()) {
    Dataset data = read_dataset_csv(c.data);
    if (data.d != cp.state.d || data.num_experiments > cp.state.num_experiments) {
      throw ConfigError("data does not match the checkpoint dimensions");
    }
    if (truth) report.kl_summary = kl_summary(data, *truth, c.kl_bins);
    const Dataset rows = c.test_fraction > 0 ? split_dataset(data, c.test_fraction, Rng(c.seed)).second : data;
    report.nll = heldout_nll(cp.state, rows, cp.model);
  }
  const std::string text = eval_report_to_json(report);
  write_text_file(output_path(c, "eval.json").string(), text);
  auto show = [&](const char* name, const std::optional<double>& v) {
    out << name << ": " << (v ? fmt(*v) : std::string("n/a")) << "\n";
  };
  show("graph_auprc", report.graph_auprc);
  show("target_auprc", report.target_auprc);
  show("nll", report.nll);
  show("kl_summary", report.kl_summary);
  return 0;
}

int cmd_logdet_check(const RunConfig& c, std::ostream& out) {
  write_run_meta(c, "logdet-check");
  Rng root(c.seed);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(c.nodes, c.nodes);
  if (!c.zero) {
    Rng g = root.substream("graph");
    const DirectedGraph graph = er_sample(c.nodes, c.density, g);
    Rng w = root.substream("weights");
    const GroundTruthSem sem = make_sem(graph, MechanismKind::Linear, c.noise_family(), c.lipschitz, w);
    jac = sem.weights.transpose();
  }
  Rng draws = root.substream("draws");
  const LogdetStats stats = logdet_statistics(jac, c.draws, c.poisson_mean, draws);
  nlohmann::json j = {{"nodes", c.nodes},
                      {"draws", stats.draws},
                      {"exact", stats.exact},
                      {"mean", stats.mean},
                      {"variance", stats.variance},
                      {"standard_error", stats.standard_error},
                      {"z_score", stats.z_score()},
                      {"reference_variance", kReferenceVariance}};
  write_text_file(output_path(c, "logdet.json").string(), j.dump(2) + "\n");
  out << "exact " << stats.exact << "  mean " << stats.mean << "  variance " << stats.variance << "  SE "
      << stats.standard_error << "  z " << stats.z_score() << "  (reference variance " << kReferenceVariance << ")\n";
  return 0;
}

// ---- option registration -------------------------------------------------

using Apply = std::function<void(RunConfig&, const RunConfig&)>;

struct Registry {
  RunConfig flags;
  std::vector<std::pair<CLI::Option*, Apply>> entries;

  template <typename T>
  void option(CLI::App& app, const std::string& name, T RunConfig::*field, const std::string& help) {
    CLI::Option* o = app.add_option(name, flags.*field, help)->capture_default_str();
    entries.emplace_back(o, [field](RunConfig& dst, const RunConfig& src) { dst.*field = src.*field; });
  }
  void flag(CLI::App& app, const std::string& name, bool RunConfig::*field, const std::string& help) {
    CLI::Option* o = app.add_flag(name, flags.*field, help);
    entries.emplace_back(o, [field](RunConfig& dst, const RunConfig& src) { dst.*field = src.*field; });
  }
  void apply(RunConfig& dst) const {
    for (const auto& [opt, fn] : entries)
      if (opt->count() > 0) fn(dst, flags);
  }
};

void add_common(CLI::App& app, Registry& r, std::string& config_path) {
  app.add_option("--config", config_path, "JSON config (or a previous run_meta.json); flags override it");
  r.option(app, "--seed", &RunConfig::seed, "Root random seed");
  r.option(app, "--output-dir", &RunConfig::output_dir, "Directory for outputs and run_meta.json");
}

void add_generation(CLI::App& app, Registry& r) {
  r.option(app, "--nodes", &RunConfig::nodes, "Number of variables d");
  r.option(app, "--density", &RunConfig::density, "Expected out-degree of the ER graph");
  r.option(app, "--sem", &RunConfig::sem, "Mechanism: linear or nonlinear");
  r.option(app, "--noise", &RunConfig::noise, "Noise family: gaussian, exponential or gumbel");
  r.option(app, "--noise-param1", &RunConfig::noise_param1,
           "Gaussian mean / exponential rate / Gumbel location (family default when omitted)");
  r.option(app, "--noise-param2", &RunConfig::noise_param2,
           "Gaussian variance / Gumbel scale (family default when omitted)");
  r.option(app, "--lipschitz", &RunConfig::lipschitz, "Spectral-norm bound of the ground-truth weights");
}

}  // namespace

// ---- RunConfig -------------------------------------------------------------

NoiseFamily RunConfig::noise_family() const {
  NoiseFamily f;
  f.kind = noise_kind_from_string(noise);
  f.param1 = noise_param1.value_or(0.0);
  f.param2 = noise_param2.value_or(0.0);
  return f;
}

void RunConfig::resolve() {
  NoiseKind kind;
  try {
    kind = noise_kind_from_string(noise);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  switch (kind) {
    case NoiseKind::Gaussian:
      if (!noise_param1) noise_param1 = 0.0;
      if (!noise_param2) noise_param2 = 0.25;
      break;
    case NoiseKind::Exponential:
      if (!noise_param1) noise_param1 = 2.0;
      if (!noise_param2) noise_param2 = 0.0;
      break;
    case NoiseKind::Gumbel:
      if (!noise_param1) noise_param1 = 0.0;
      if (!noise_param2) noise_param2 = 0.5;
      break;
  }
  try {
    noise_family().validate();
    (void)mechanism_kind_from_string(sem);
    (void)mechanism_kind_from_string(activation);
    (void)intervention_kind_from_string(intervention);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  (void)logdet_mode_from_string(logdet);
  if (nodes < 1) throw ConfigError("--nodes must be >= 1");
  if (density < 0) throw ConfigError("--density must be >= 0");
  if (samples < 1) throw ConfigError("--samples must be >= 1");
  if (trials < 1) throw ConfigError("--trials must be >= 1");
  if (design != "single" && design != "single+obs" && design != "random") {
    throw ConfigError("--design must be single, single+obs or random");
  }
  if (max_targets < 1 || max_targets > nodes) throw ConfigError("--max-targets must lie in [1, nodes]");
  if (!(lipschitz > 0 && lipschitz < 1)) throw ConfigError("--lipschitz must lie in (0,1)");
  if (std::abs(alpha) > 1) throw ConfigError("--alpha must satisfy |alpha| <= 1");
  if (!(test_fraction >= 0 && test_fraction < 1)) throw ConfigError("--test-fraction must lie in [0,1)");
  if (checkpoint_every < 0) throw ConfigError("--checkpoint-every must be >= 0");
  if (kl_bins < 1) throw ConfigError("--kl-bins must be >= 1");
  if (draws < 2) throw ConfigError("--draws must be >= 2");
  train_config().validate();
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.seed = seed;
  t.adam.lr = lr;
  t.weights.lambda_graph = lambda_graph;
  t.weights.lambda_target = lambda_target;
  t.model.tau_graph = tau_graph;
  t.model.tau_target = tau_target;
  t.model.poisson_mean = poisson_mean;
  t.model.logdet = logdet_mode_from_string(logdet);
  t.model.activation = mechanism_kind_from_string(activation);
  t.model.precondition = precondition;
  t.model.lipschitz = lipschitz;
  return t;
}

InterventionSpec RunConfig::intervention_spec(Rng& rng) const {
  InterventionSpec spec;
  spec.kind = intervention_kind_from_string(intervention);
  spec.shift = shift;
  spec.scale = scale;
  spec.alpha = alpha;
  spec.hard_shift = hard_shift;
  if (spec.kind == InterventionKind::None) {
    spec.targets = {NodeSet{}};
  } else if (design == "random") {
    for (int k = 0; k < nodes; ++k) {
      const int size = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(max_targets)));
      std::vector<int> pool(static_cast<std::size_t>(nodes));
      for (int i = 0; i < nodes; ++i) pool[static_cast<std::size_t>(i)] = i;
      for (int i = 0; i < size; ++i) {
        const auto j = static_cast<std::size_t>(i) +
                       static_cast<std::size_t>(rng.uniform_index(static_cast<std::uint64_t>(nodes - i)));
        std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
      }
      NodeSet set(pool.begin(), pool.begin() + size);
      std::sort(set.begin(), set.end());
      spec.targets.push_back(std::move(set));
    }
  } else {
    spec.targets = InterventionSpec::single_node_design(nodes, design == "single+obs");
  }
  return spec;
}

std::string to_json(const RunConfig& config) {
  nlohmann::json j = nlohmann::json::object();
  visit_fields(config, [&](const char* name, const auto& value) { j[name] = field_to_json(value); });
  return j.dump(2);
}

RunConfig merge_json(RunConfig base, const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (j.is_object() && j.contains("command") && j.contains("config")) j = j.at("config");
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  std::set<std::string> known;
  visit_fields(base, [&](const char* name, auto&) { known.insert(name); });
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) throw ConfigError("unknown config key '" + item.key() + "'");
  }
  try {
    visit_fields(base, [&](const char* name, auto& value) {
      if (j.contains(name)) field_from_json(j.at(name), value);
    });
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config has a value of the wrong type: ") + e.what());
  }
  return base;
}

Dataset generate(const RunConfig& c, std::uint64_t seed) {
  const Rng root(seed);
  Rng graph_rng = root.substream("graph");
  const DirectedGraph graph = c.cycles >= 0 ? er_sample_with_cycles(c.nodes, c.density, c.cycles, graph_rng)
                                            : er_sample(c.nodes, c.density, graph_rng);
  Rng weight_rng = root.substream("weights");
  const GroundTruthSem sem =
      make_sem(graph, mechanism_kind_from_string(c.sem), c.noise_family(), c.lipschitz, weight_rng);
  Rng design_rng = root.substream("design");
  const InterventionSpec spec = c.intervention_spec(design_rng);
  GenerateOptions options;
  options.samples_per_experiment = c.samples;
  return generate_dataset(sem, spec, options, root);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"scout: causal discovery of cyclic nonlinear SEMs with unknown soft-intervention targets"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Registry reg;
  std::string config_path;

  CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic dataset and its truth sidecar");
  add_common(*gen, reg, config_path);
  add_generation(*gen, reg);
  reg.option(*gen, "--intervention", &RunConfig::intervention, "Intervention: shift, scale, noisy, hard or none");
  reg.option(*gen, "--shift", &RunConfig::shift, "Noise shift for shift interventions");
  reg.option(*gen, "--scale", &RunConfig::scale, "Noise multiplier for scale interventions");
  reg.option(*gen, "--alpha", &RunConfig::alpha, "Mechanism multiplier for noisy-function interventions, |alpha| <= 1");
  reg.option(*gen, "--hard-shift", &RunConfig::hard_shift, "Noise offset for hard interventions");
  reg.option(*gen, "--samples", &RunConfig::samples, "Samples per experiment");
  reg.option(*gen, "--design", &RunConfig::design, "Experiment design: single, single+obs or random");
  reg.option(*gen, "--max-targets", &RunConfig::max_targets, "Largest target set in the random design");
  reg.option(*gen, "--cycles", &RunConfig::cycles, "Require exactly this many simple cycles (-1: any)");
  reg.option(*gen, "--trials", &RunConfig::trials, "Independent datasets with seeds seed, seed+1, ...");

  CLI::App* tr = app.add_subcommand("train", "Fit the model to a dataset");
  add_common(*tr, reg, config_path);
  reg.option(*tr, "--data", &RunConfig::data, "Dataset CSV");
  reg.option(*tr, "--truth", &RunConfig::truth, "Truth JSON for per-epoch AUPRC (optional)");
  reg.option(*tr, "--known-targets", &RunConfig::known_targets, "Truth JSON whose targets are frozen into the model");
  reg.option(*tr, "--epochs", &RunConfig::epochs, "Training epochs");
  reg.option(*tr, "--batch-size", &RunConfig::batch_size, "Minibatch size");
  reg.option(*tr, "--lr", &RunConfig::lr, "Adam learning rate");
  reg.option(*tr, "--lambda-graph", &RunConfig::lambda_graph, "Graph sparsity weight");
  reg.option(*tr, "--lambda-target", &RunConfig::lambda_target, "Target sparsity weight");
  reg.option(*tr, "--tau-graph", &RunConfig::tau_graph, "Graph mask temperature");
  reg.option(*tr, "--tau-target", &RunConfig::tau_target, "Target mask temperature");
  reg.option(*tr, "--poisson-mean", &RunConfig::poisson_mean, "Mean of the series cut-off distribution");
  reg.option(*tr, "--logdet", &RunConfig::logdet, "Log-determinant: series or exact");
  reg.option(*tr, "--activation", &RunConfig::activation, "Model mechanism: nonlinear or linear");
  reg.option(*tr, "--lipschitz", &RunConfig::lipschitz, "Spectral-norm bound enforced after every step");
  reg.flag(*tr, "--precondition", &RunConfig::precondition, "Learn a diagonal preconditioner");
  reg.option(*tr, "--checkpoint-every", &RunConfig::checkpoint_every, "Write a checkpoint every N epochs (0: only at the end)");
  reg.option(*tr, "--test-fraction", &RunConfig::test_fraction, "Hold out this fraction of rows (0: train on all)");

  CLI::App* ev = app.add_subcommand("eval", "Score a checkpoint against truth and/or data");
  add_common(*ev, reg, config_path);
  reg.option(*ev, "--checkpoint", &RunConfig::checkpoint, "Checkpoint JSON");
  reg.option(*ev, "--truth", &RunConfig::truth, "Truth JSON (graph and target AUPRC)");
  reg.option(*ev, "--data", &RunConfig::data, "Dataset CSV (NLL and, with truth, the histogram KL)");
  reg.option(*ev, "--test-fraction", &RunConfig::test_fraction, "Score only the held-out split used by train");
  reg.option(*ev, "--kl-bins", &RunConfig::kl_bins, "Histogram bins for the KL diagnostic");

  CLI::App* ld = app.add_subcommand("logdet-check", "Compare the series log-det estimator with the exact value");
  add_common(*ld, reg, config_path);
  add_generation(*ld, reg);
  reg.option(*ld, "--draws", &RunConfig::draws, "Number of independent estimates");
  reg.option(*ld, "--poisson-mean", &RunConfig::poisson_mean, "Mean of the series cut-off distribution");
  reg.flag(*ld, "--zero", &RunConfig::zero, "Use J = 0 instead of a random linear SEM");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig config;
    if (!config_path.empty()) config = merge_json(config, read_text_file(config_path));
    reg.apply(config);
    config.resolve();
    if (gen->parsed()) return cmd_gen(config, out);
    if (tr->parsed()) return cmd_train(config, out, err);
    if (ev->parsed()) return cmd_eval(config, out);
    return cmd_logdet_check(config, out);
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    err << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    err << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace scout::cli
