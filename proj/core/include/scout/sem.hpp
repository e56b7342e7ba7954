#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scout/graph.hpp"
#include "scout/stochastic.hpp"

namespace scout {

using Mechanism = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

enum class MechanismKind { Linear, TanhMlp };

std::string to_string(MechanismKind kind);
MechanismKind mechanism_kind_from_string(const std::string& name);

/// Largest singular value by power iteration on W^T W. Iterates until the
/// per-step relative change drops below 1e-3 * rel_tol, which bounds the
/// relative error by rel_tol unless the top two singular values nearly coincide.
double spectral_norm(const Eigen::MatrixXd& w, double rel_tol = 1e-6, int max_iter = 10000);

/// W * (L / sigma_max(W)) if sigma_max(W) > L, otherwise W.
Eigen::MatrixXd rescale_to_lipschitz(const Eigen::MatrixXd& w, double lipschitz);

/// Edge weights ~ Unif((-hi,-lo) U (lo,hi)) on the edges of g, zero elsewhere.
Eigen::MatrixXd sample_edge_weights(const DirectedGraph& g, Rng& rng, double lo = 0.2, double hi = 0.9);

/// Ground-truth SEM X = f(X) + eps with f(x) = W^T x (Linear) or tanh(W^T x) (TanhMlp).
/// W(j, i) is the weight of edge j -> i.
struct GroundTruthSem {
  DirectedGraph graph{1};
  MechanismKind kind = MechanismKind::TanhMlp;
  Eigen::MatrixXd weights;
  double lipschitz = 0.9;
  NoiseFamily noise;

  int size() const { return graph.size(); }
  void validate() const;
};

/// Samples weights on `graph` and rescales them to the Lipschitz bound.
GroundTruthSem make_sem(const DirectedGraph& graph, MechanismKind kind, const NoiseFamily& noise,
                        double lipschitz, Rng& rng);

Eigen::VectorXd mechanism_eval(const GroundTruthSem& sem, const Eigen::VectorXd& x);
/// J(i, j) = d f_i / d x_j.
Eigen::MatrixXd mechanism_jacobian(const GroundTruthSem& sem, const Eigen::VectorXd& x);

enum class InterventionKind { None, Shift, Scale, NoisyFunction, Hard };

std::string to_string(InterventionKind kind);
InterventionKind intervention_kind_from_string(const std::string& name);

struct InterventionSpec {
  InterventionKind kind = InterventionKind::Shift;
  double shift = 2.0;       // Shift: eps~ = shift + eps
  double scale = 2.0;       // Scale: eps~ = scale * eps
  double alpha = -1.0;      // NoisyFunction: f~ = alpha * f, |alpha| <= 1
  double hard_shift = 0.0;  // Hard: X_i = eps + hard_shift
  std::vector<NodeSet> targets;  // one node set per experiment

  int num_experiments() const { return static_cast<int>(targets.size()); }
  void validate(int d) const;
  /// K x d, entry 1 = intervened.
  Eigen::MatrixXi target_matrix(int d) const;

  /// One experiment per node, optionally preceded by an observational one.
  static std::vector<NodeSet> single_node_design(int d, bool with_observational);
};

/// The combined mechanism f^(I_k) = U_k f + (I - U_k) f~ and the matching
/// noise eta = U_k eps + (I - U_k) eps~ for one experiment.
class ExperimentMechanism {
 public:
  ExperimentMechanism(const GroundTruthSem& sem, const InterventionSpec& spec, int experiment);

  Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;
  Eigen::VectorXd sample_noise(Rng& rng) const;
  Mechanism as_function() const;

  bool is_target(int node) const { return target_[node] != 0; }
  const GroundTruthSem& sem() const { return *sem_; }

 private:
  const GroundTruthSem* sem_;
  InterventionSpec spec_;
  std::vector<char> target_;
  Eigen::VectorXd row_scale_;  // 1 off-target, alpha (noisy) or 0 (hard) on target
};

ExperimentMechanism apply_intervention(const GroundTruthSem& sem, const InterventionSpec& spec, int experiment);

struct FixedPointResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double residual = 0.0;  // ||x - f(x) - eta||_inf
};

/// Banach iteration x <- f(x) + eta from x = 0 until the residual is <= tol.
/// Throws NumericalError if max_iter is reached first.
FixedPointResult solve_fixed_point(const Mechanism& f, const Eigen::VectorXd& eta, double tol = 1e-10,
                                   int max_iter = 1000);

/// Iterations Banach guarantees for a contraction with constant L started at 0.
int banach_iteration_bound(double lipschitz, double eta_norm, double tol);

/// x -> Lambda^{-1} f(Lambda x) for a positive diagonal Lambda.
Mechanism precondition(Mechanism f, const Eigen::VectorXd& lambda_diag);

}  // namespace scout
