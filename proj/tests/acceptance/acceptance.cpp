// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: scout_acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "cli.hpp"
#include "scout/logdet.hpp"
#include "scout/metrics.hpp"
#include "scout/separation.hpp"
#include "scout/trainer.hpp"

using namespace scout;

namespace {

// Tolerances, pinned.
constexpr double kShiftGraphMin = 0.95;
constexpr double kShiftTargetMin = 0.99;
constexpr double kScaleTargetMin = 0.95;
constexpr double kNoisyTargetMax = 0.6;
constexpr double kKnownGraphMin = 0.9;
constexpr double kLogdetMaxZ = 3.0;
constexpr long kLogdetDraws = 100000;
constexpr double kPaperLogdetVariance = 3.297e-3;
constexpr double kSeedStdMax = 0.02;
constexpr double kGradRtol = 1e-3;
constexpr double kSplineRoundTrip = 1e-8;
constexpr double kSpectralMax = 0.9 + 1e-5;
constexpr double kFixedPointResidual = 1e-8;
constexpr double kNormalizationTol = 1e-3;
constexpr double kScalingTargetMin = 0.95;

const std::vector<std::uint64_t> kSeeds{1, 2, 3};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i]);
  return s + "]";
}

cli::RunConfig protocol(const std::string& intervention) {
  cli::RunConfig c;
  c.intervention = intervention;
  c.resolve();
  return c;
}

struct Run {
  Dataset data;
  TrainResult result;
  double graph = 0.0;
  double target = 0.0;
  double seconds_per_epoch = 0.0;
  bool loss_fell = false;
};

Run fit(const cli::RunConfig& c, std::uint64_t data_seed, std::uint64_t train_seed, bool known_targets = false) {
  Run r;
  r.data = cli::generate(c, data_seed);
  TrainConfig tc = c.train_config();
  tc.seed = train_seed;
  if (known_targets) tc.known_targets = r.data.truth->targets;
  const auto t0 = std::chrono::steady_clock::now();
  r.result = train(r.data, tc);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.seconds_per_epoch = secs / std::max(1, r.result.epochs_completed);
  r.graph = graph_recovery(r.result.state.edge_probabilities(), r.data.truth->graph);
  r.target = target_recovery(r.result.state.target_probabilities(), r.data.truth->targets);
  const auto& m = r.result.metrics;
  r.loss_fell = !r.result.diverged && m.size() >= 2 && m.back().mean_loss < m.front().mean_loss;
  std::printf("    data seed %llu, train seed %llu: graph %.4f target %.4f, %.3f s/epoch%s\n",
              static_cast<unsigned long long>(data_seed), static_cast<unsigned long long>(train_seed), r.graph,
              r.target, r.seconds_per_epoch, r.result.diverged ? " (DIVERGED)" : "");
  std::fflush(stdout);
  return r;
}

struct Verdict {
  bool pass;
  std::string detail;
};

Verdict report_line(int id, const std::string& name, const Verdict& v) {
  std::printf("[%s] %d %s: %s\n", v.pass ? "PASS" : "FAIL", id, name.c_str(), v.detail.c_str());
  std::fflush(stdout);
  return v;
}

// Mean over experiments and nodes of the histogram KL between each
// interventional experiment and an observational sample of the same SEM.
double kl_strength(const Dataset& data, std::uint64_t seed) {
  InterventionSpec obs = *data.truth->spec;
  obs.kind = InterventionKind::None;
  obs.targets = {NodeSet{}};
  GenerateOptions o;
  o.samples_per_experiment = 1000;
  const Dataset ref = generate_dataset(*data.truth->sem, obs, o, Rng(seed).substream("kl-reference"));
  std::vector<Eigen::MatrixXd> per;
  for (int k = 0; k < data.num_experiments; ++k) per.push_back(data.experiment_rows(k));
  return histogram_kl(per, ref.x, 100).mean;
}

Verdict recovery(const std::string& intervention, double graph_min, double target_min) {
  std::vector<double> g, t;
  bool fell = true;
  for (auto seed : kSeeds) {
    const Run r = fit(protocol(intervention), seed, seed);
    g.push_back(r.graph);
    t.push_back(r.target);
    fell = fell && r.loss_fell;
  }
  const bool pass = median(g) >= graph_min && median(t) >= target_min && fell;
  return {pass, "median graph AUPRC " + fmt(median(g)) + " " + list(g) + " (>= " + fmt(graph_min, 2) +
                    "), median target AUPRC " + fmt(median(t)) + " " + list(t) + " (>= " + fmt(target_min, 2) +
                    "), loss fell: " + (fell ? "yes" : "no")};
}

Verdict criterion1() { return recovery("shift", kShiftGraphMin, kShiftTargetMin); }
Verdict criterion2() { return recovery("scale", 0.0, kScaleTargetMin); }

Verdict criterion3() {
  std::vector<double> t, kl_noisy, kl_shift;
  bool ordered = true, fell = true;
  const cli::RunConfig noisy = protocol("noisy");
  const cli::RunConfig shift = protocol("shift");
  for (auto seed : kSeeds) {
    const Run r = fit(noisy, seed, seed);
    t.push_back(r.target);
    fell = fell && r.loss_fell;
    kl_noisy.push_back(kl_strength(r.data, seed));
    kl_shift.push_back(kl_strength(cli::generate(shift, seed), seed));
    ordered = ordered && kl_noisy.back() < kl_shift.back();
  }
  const bool pass = median(t) < kNoisyTargetMax && ordered && fell;
  return {pass, "median target AUPRC " + fmt(median(t)) + " " + list(t) + " (< " + fmt(kNoisyTargetMax, 2) +
                    "), KL noisy " + list(kl_noisy) + " < shift " + list(kl_shift) + ": " +
                    (ordered ? "yes" : "no") + ", loss fell: " + (fell ? "yes" : "no")};
}

Verdict criterion4() {
  std::vector<double> g;
  bool fell = true;
  for (auto seed : kSeeds) {
    const Run r = fit(protocol("noisy"), seed, seed, true);
    g.push_back(r.graph);
    fell = fell && r.loss_fell;
  }
  return {median(g) >= kKnownGraphMin && fell, "median graph AUPRC " + fmt(median(g)) + " " + list(g) + " (>= " +
                                                   fmt(kKnownGraphMin, 2) + "), loss fell: " + (fell ? "yes" : "no")};
}

Verdict criterion5() {
  cli::RunConfig c = protocol("shift");
  c.sem = "linear";
  const Dataset data = cli::generate(c, 1);
  Rng rng = Rng(1).substream("draws");
  const LogdetStats s = logdet_statistics(data.truth->sem->weights.transpose(), kLogdetDraws, 4.0, rng);
  return {s.z_score() <= kLogdetMaxZ,
          "exact " + fmt(s.exact, 5) + ", mean " + fmt(s.mean, 5) + ", SE " + fmt(s.standard_error, 5) + ", z " +
              fmt(s.z_score(), 2) + " (<= 3) at " + std::to_string(s.draws) + " draws; variance " +
              fmt(s.variance, 4) + " (reference " + std::to_string(kPaperLogdetVariance) + ", informational)"};
}

Verdict criterion6() {
  std::vector<double> g;
  for (std::uint64_t init = 0; init < 5; ++init) g.push_back(fit(protocol("shift"), 1, 100 + init).graph);
  double mean = 0.0;
  for (double v : g) mean += v;
  mean /= static_cast<double>(g.size());
  double var = 0.0;
  for (double v : g) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(g.size() - 1));
  return {sd <= kSeedStdMax, "graph AUPRC over 5 inits " + list(g) + ", sample std " + fmt(sd, 5) + " (<= " +
                                 fmt(kSeedStdMax, 2) + ")"};
}

// ---- criterion 7: property suite ------------------------------------------

double model_gradient_error() {
  ModelConfig cfg;
  cfg.precondition = true;
  cfg.spline.bins = 4;
  Rng rng(7);
  ModelState s = ModelState::init(3, 2, cfg, rng);
  std::srand(7);
  s.theta = Eigen::MatrixXd::Random(3, 3);
  s.theta_tilde = Eigen::MatrixXd::Random(3, 3);
  rescale_model(s, 0.9);
  s.spline_obs = 0.5 * Eigen::MatrixXd::Random(3, cfg.spline.param_count());
  s.spline_int = 0.5 * Eigen::MatrixXd::Random(3, cfg.spline.param_count());
  s.log_lambda = 0.2 * Eigen::VectorXd::Random(3);
  const MaskSample m = sample_masks(Eigen::MatrixXd::Constant(3, 3, 2.0), Eigen::MatrixXd::Zero(2, 3), 1.0, 0.5, rng);
  const Eigen::MatrixXd x = 2.0 * Eigen::MatrixXd::Random(8, 3);
  const std::vector<int> exp{0, 1, 0, 1, 1, 0, 0, 1};
  const BatchSeriesDraw series = draw_batch_series(8, 3, 4.0, rng);

  auto value = [&](const ModelState& st) {
    ad::Tape tape;
    const ModelVars v = record_parameters(tape, st, cfg);
    return ad::mean(batch_log_density(tape, v, st, x, exp, m, cfg, LogdetMode::Series, &series)).scalar();
  };
  ad::Tape tape;
  const ModelVars v = record_parameters(tape, s, cfg);
  tape.backward(ad::mean(batch_log_density(tape, v, s, x, exp, m, cfg, LogdetMode::Series, &series)));
  struct Group {
    Eigen::MatrixXd ModelState::*field;
    Eigen::MatrixXd grad;
  };
  const std::vector<Group> groups{{&ModelState::theta, v.theta.grad()},
                                  {&ModelState::theta_tilde, v.theta_tilde.grad()},
                                  {&ModelState::spline_obs, v.spline_obs.grad()},
                                  {&ModelState::spline_int, v.spline_int.grad()}};
  double worst = 0.0;
  const double h = 1e-6;
  for (const auto& g : groups) {
    for (Eigen::Index i = 0; i < g.grad.size(); ++i) {
      ModelState up = s, down = s;
      (up.*g.field)(i) += h;
      (down.*g.field)(i) -= h;
      const double fd = (value(up) - value(down)) / (2 * h);
      worst = std::max(worst, std::abs(fd - g.grad(i)) / (1e-6 + std::abs(fd)));
    }
  }
  for (Eigen::Index i = 0; i < 3; ++i) {
    ModelState up = s, down = s;
    up.log_lambda(i) += h;
    down.log_lambda(i) -= h;
    const double fd = (value(up) - value(down)) / (2 * h);
    worst = std::max(worst, std::abs(fd - v.log_lambda.grad()(0, i)) / (1e-6 + std::abs(fd)));
  }
  return worst;
}

double spline_round_trip_error() {
  const SplineConfig cfg;
  double worst = 0.0;
  std::srand(11);
  for (int t = 0; t < 20; ++t) {
    const SplineKnots k = spline_knots(3.0 * Eigen::RowVectorXd::Random(cfg.param_count()), cfg);
    for (int i = 0; i <= 1000; ++i) {
      const double e = -7.0 + 14.0 * i / 1000.0;
      worst = std::max(worst, std::abs(spline_inverse(spline_forward(e, k).z, k) - e));
    }
  }
  return worst;
}

double max_post_step_norm(long& steps) {
  cli::RunConfig c = protocol("shift");
  c.epochs = 3;
  const Dataset data = cli::generate(c, 1);
  double worst = 0.0;
  TrainCallbacks cb;
  cb.on_step = [&](const StepInfo& info) {
    ++steps;
    for (const auto* w : {&info.state->theta, &info.state->theta_tilde}) {
      worst = std::max(worst, Eigen::JacobiSVD<Eigen::MatrixXd>(*w).singularValues()(0));
    }
  };
  train(data, c.train_config(), cb);
  return worst;
}

double max_fixed_point_residual(long& samples) {
  double worst = 0.0;
  for (const std::string kind : {"shift", "scale", "noisy"}) {
    const cli::RunConfig c = protocol(kind);
    Rng root(1);
    Rng g = root.substream("graph");
    Rng w = root.substream("weights");
    Rng d = root.substream("design");
    const DirectedGraph graph = er_sample(c.nodes, c.density, g);
    const GroundTruthSem sem = make_sem(graph, MechanismKind::TanhMlp, c.noise_family(), c.lipschitz, w);
    const InterventionSpec spec = c.intervention_spec(d);
    for (int k = 0; k < spec.num_experiments(); ++k) {
      const ExperimentMechanism mech(sem, spec, k);
      Rng noise = root.substream("residual", static_cast<std::uint64_t>(k));
      for (int n = 0; n < c.samples; ++n) {
        const Eigen::VectorXd eta = mech.sample_noise(noise);
        const auto r = solve_fixed_point(mech.as_function(), eta);
        worst = std::max(worst, (r.x - mech.evaluate(r.x) - eta).cwiseAbs().maxCoeff());
        ++samples;
      }
    }
  }
  return worst;
}

double brute_ap(const std::vector<double>& s, const std::vector<int>& l) {
  std::vector<double> th = s;
  std::sort(th.begin(), th.end(), std::greater<>());
  th.erase(std::unique(th.begin(), th.end()), th.end());
  double pos = 0;
  for (int v : l) pos += v;
  double prev = 0, area = 0;
  for (double t : th) {
    double tp = 0, pp = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i] >= t) {
        ++pp;
        tp += l[i];
      }
    area += (tp / pos - prev) * (tp / pp);
    prev = tp / pos;
  }
  return area;
}

long auprc_mismatches(long& cases) {
  long bad = 0;
  for (int n = 1; n <= 8; ++n) {
    for (int variant = 0; variant < 3; ++variant) {
      std::vector<double> s(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        s[static_cast<std::size_t>(i)] = variant == 0 ? i : variant == 1 ? (i * 5 % 7) / 2 : 0.0;
      }
      for (int code = 1; code < (1 << n); ++code) {
        std::vector<int> l(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) l[static_cast<std::size_t>(i)] = (code >> i) & 1;
        if (std::abs(auprc(s, l) - brute_ap(s, l)) > 1e-12) ++bad;
        ++cases;
      }
    }
  }
  return bad;
}

long separation_mismatches(long& queries) {
  long bad = 0;
  for (int d = 2; d <= 4; ++d) {
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) pairs.emplace_back(i, j);
    int orientations = 1, assignments = 1;
    for (std::size_t i = 0; i < pairs.size(); ++i) orientations *= 3;
    for (int i = 0; i < d; ++i) assignments *= 4;
    for (int code = 0; code < orientations; ++code) {
      DirectedGraph g(d);
      int x = code;
      for (const auto& [i, j] : pairs) {
        if (x % 3 == 1) g.add_edge(i, j);
        if (x % 3 == 2) g.add_edge(j, i);
        x /= 3;
      }
      if (g.has_cycle()) continue;
      for (int a = 0; a < assignments; ++a) {
        NodeSet sa, sb, sc;
        int y = a;
        for (int v = 0; v < d; ++v, y /= 4) {
          if (y % 4 == 1) sa.push_back(v);
          if (y % 4 == 2) sb.push_back(v);
          if (y % 4 == 3) sc.push_back(v);
        }
        if (sa.empty() || sb.empty()) continue;
        if (sigma_separated(g, sa, sb, sc) != d_separated(g, sa, sb, sc)) ++bad;
        ++queries;
      }
    }
  }
  return bad;
}

double normalization_error() {
  double worst = 0.0;
  for (int d = 1; d <= 2; ++d) {
    ModelConfig cfg;
    Rng rng(13);
    ModelState s = ModelState::init(d, 2, cfg, rng);
    std::srand(13);
    s.theta = Eigen::MatrixXd::Random(d, d);
    s.theta_tilde = Eigen::MatrixXd::Random(d, d);
    rescale_model(s, 0.9);
    s.spline_obs = 0.7 * Eigen::MatrixXd::Random(d, cfg.spline.param_count());
    s.spline_int = 0.7 * Eigen::MatrixXd::Random(d, cfg.spline.param_count());
    s.phi = Eigen::MatrixXd::Constant(d, d, 30.0);
    s.phi.diagonal().setZero();
    s.psi = Eigen::MatrixXd::Constant(2, d, 30.0);
    s.psi(1, 0) = -30.0;
    const MaskSample m = threshold_masks(s);
    const double lo = -9.0, h = 0.04;
    const int n = 451;
    for (int k = 0; k < 2; ++k) {
      double total = 0.0;
      Eigen::VectorXd x(d);
      if (d == 1) {
        for (int a = 0; a < n; ++a) {
          x << lo + a * h;
          total += std::exp(interventional_log_density(x, k, s, m, cfg, LogdetMode::Exact)) * h;
        }
      } else {
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) {
            x << lo + a * h, lo + b * h;
            total += std::exp(interventional_log_density(x, k, s, m, cfg, LogdetMode::Exact)) * h * h;
          }
      }
      worst = std::max(worst, std::abs(total - 1.0));
    }
  }
  return worst;
}

Verdict criterion7() {
  const double grad = model_gradient_error();
  const double spline = spline_round_trip_error();
  long steps = 0, samples = 0, cases = 0, queries = 0;
  const double norm = max_post_step_norm(steps);
  const double residual = max_fixed_point_residual(samples);
  const long ap_bad = auprc_mismatches(cases);
  const long sep_bad = separation_mismatches(queries);
  const double norm_err = normalization_error();
  const bool pass = grad <= kGradRtol && spline < kSplineRoundTrip && norm <= kSpectralMax && steps > 0 &&
                    residual <= kFixedPointResidual && ap_bad == 0 && sep_bad == 0 && norm_err <= kNormalizationTol;
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "gradient rel err %.2e (<= 1e-3); spline round trip %.2e (< 1e-8); max post-step sigma %.6f over %ld "
                "steps (<= 0.90001); fixed-point residual %.2e over %ld samples (<= 1e-8); AUPRC mismatches %ld/%ld; "
                "sigma/d mismatches %ld/%ld; normalization err %.2e (<= 1e-3)",
                grad, spline, norm, steps, residual, samples, ap_bad, cases, sep_bad, queries, norm_err);
  return {pass, buf};
}

Verdict criterion8() {
  cli::RunConfig c30 = protocol("shift");
  c30.nodes = 30;
  const Run small = fit(protocol("shift"), 1, 1);
  const Run big = fit(c30, 1, 1);
  const auto& m = big.result.metrics;
  std::string trend;
  if (!m.empty()) {
    const double first = m.front().wallclock_s;
    const double last = m.size() > 1 ? m.back().wallclock_s - m[m.size() - 2].wallclock_s : first;
    trend = ", d=30 epoch 1 " + fmt(first) + " s, last epoch " + fmt(last) + " s";
  }
  const double ratio = big.seconds_per_epoch / small.seconds_per_epoch;
  const bool pass = !big.result.diverged && big.target >= kScalingTargetMin && big.loss_fell;
  return {pass, "d=30 target AUPRC " + fmt(big.target) + " (>= 0.95), graph " + fmt(big.graph) +
                    "; s/epoch d=10 " + fmt(small.seconds_per_epoch) + " -> d=30 " + fmt(big.seconds_per_epoch) +
                    " (x" + fmt(ratio, 1) + ", superlinear in d: " + (ratio > 3.0 ? "yes" : "no") +
                    ", informational)" + trend};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"shift-intervention recovery", criterion1},
      {"scale-intervention recovery", criterion2},
      {"noisy-function hardness", criterion3},
      {"known-target control", criterion4},
      {"log-det estimator statistics", criterion5},
      {"seed sensitivity", criterion6},
      {"property suite", criterion7},
      {"scaling smoke", criterion8},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    std::printf("  running criterion %d ...\n", id);
    std::fflush(stdout);
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!report_line(id, criteria[i].first, v).pass) ++failures;
  }
  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
