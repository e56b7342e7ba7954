#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scout/dataset.hpp"
#include "scout/graph.hpp"
#include "scout/model.hpp"

namespace scout {

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

/// One point per distinct score, in decreasing threshold order.
struct PrCurve {
  std::vector<PrPoint> points;
  double area = 0.0;
};

/// Equal scores form a single threshold step; area is the step-wise sum
/// sum_t (R_t - R_{t-1}) P_t. Throws std::invalid_argument without positives.
PrCurve pr_curve(std::span<const double> scores, std::span<const int> labels);
double auprc(std::span<const double> scores, std::span<const int> labels);

/// Off-diagonal entries of a d x d score matrix against the truth adjacency
/// (score(j, i) rates edge j -> i).
PrCurve graph_pr_curve(const Eigen::MatrixXd& scores, const DirectedGraph& truth);
double graph_recovery(const Eigen::MatrixXd& scores, const DirectedGraph& truth);

/// K x d intervention scores against the K x d truth (1 = intervened).
double target_recovery(const Eigen::MatrixXd& scores, const Eigen::MatrixXi& truth);

/// S(i, j) = mean over probes of (d f_i / d x_j)^2 and the thresholded graph in
/// edge orientation: adjacency(j, i) = 1[S(i, j) > tau].
struct JacobianProxy {
  Eigen::MatrixXd sensitivity;
  Eigen::MatrixXi adjacency;
};

using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

JacobianProxy squared_jacobian_proxy(const JacobianFn& jacobian, const Eigen::MatrixXd& probes, double tau = 1e-3);
Eigen::MatrixXd standard_normal_probes(int count, int d, Rng& rng);

/// Mean negative log-density over rows under thresholded masks. Uses the exact
/// log-det for d <= 64 and otherwise a seeded series estimate.
double heldout_nll(const ModelState& state, const Dataset& rows, const ModelConfig& config);

/// KL(p || q) between histograms on shared equal-width bins spanning both
/// samples; every bin mass gets +eps before normalisation.
double histogram_kl(std::span<const double> p, std::span<const double> q, int bins = 100, double eps = 1e-10);

struct KlSummary {
  Eigen::MatrixXd divergence;  // K x d, D(k, i) = KL(p_{k,i} || q_i)
  double mean = 0.0;           // average over experiments, then nodes
};

/// `interventional[k]` holds the samples of experiment k (n_k x d); `observational` is n x d.
KlSummary histogram_kl(const std::vector<Eigen::MatrixXd>& interventional, const Eigen::MatrixXd& observational,
                       int bins = 100, double eps = 1e-10);

/// Output of `scout eval`; absent fields are written as null.
struct EvalReport {
  std::optional<double> graph_auprc;
  std::optional<double> target_auprc;
  std::optional<double> nll;
  std::optional<double> kl_summary;
  PrCurve pr_curve;
};

/// {"graph_auprc", "target_auprc", "nll", "kl_summary", "pr_curve": [{threshold, precision, recall}...]}.
std::string eval_report_to_json(const EvalReport& report);

}  // namespace scout
