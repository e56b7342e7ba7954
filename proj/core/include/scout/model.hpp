#pragma once

#include <span>
#include <string>

#include <Eigen/Dense>

#include "scout/autodiff.hpp"
#include "scout/logdet.hpp"
#include "scout/sem.hpp"
#include "scout/spline.hpp"
#include "scout/stochastic.hpp"

namespace scout {

enum class LogdetMode { Series, Exact };

std::string to_string(LogdetMode mode);
LogdetMode logdet_mode_from_string(const std::string& name);

struct ModelConfig {
  SplineConfig spline;
  MechanismKind activation = MechanismKind::TanhMlp;
  double tau_graph = 1.0;
  double tau_target = 0.5;
  double poisson_mean = 4.0;
  LogdetMode logdet = LogdetMode::Series;
  bool precondition = false;
  double lipschitz = 0.9;
  double init_range = 0.1;

  void validate() const;
};

/// Every learnable quantity of the model.
///
/// phi keeps a zero diagonal; it is never read there because every use goes
/// through the off-diagonal mask, so self-loops have edge probability 0.
/// psi uses the observed polarity: sigmoid(psi) is the probability that a node
/// is left alone in an experiment.
struct ModelState {
  int d = 0;
  int num_experiments = 0;
  Eigen::MatrixXd theta;        // d x d, theta(j, i) weighs x_j in f_i
  Eigen::MatrixXd theta_tilde;  // d x d
  Eigen::MatrixXd spline_obs;   // d x (3 bins - 1)
  Eigen::MatrixXd spline_int;   // d x (3 bins - 1)
  Eigen::MatrixXd phi;          // d x d
  Eigen::MatrixXd psi;          // K x d
  Eigen::VectorXd log_lambda;   // d, preconditioner Lambda = exp(log_lambda)
  bool targets_known = false;

  static ModelState init(int d, int num_experiments, const ModelConfig& config, Rng& rng);

  void validate() const;
  Eigen::VectorXd lambda_diag() const { return log_lambda.array().exp().matrix(); }
  /// sigmoid(phi) with a zero diagonal.
  Eigen::MatrixXd edge_probabilities() const;
  /// 1 - sigmoid(psi): probability that node j is intervened in experiment k.
  Eigen::MatrixXd target_probabilities() const;
};

/// Known-target mode: psi is pinned to +-30 logits from a K x d matrix with
/// 1 = intervened, and is excluded from optimisation.
void freeze_targets(ModelState& state, const Eigen::MatrixXi& intervened);

/// Zeroes the unused diagonals, then scales theta and theta_tilde so each has
/// sigma_max <= L; no-op when already inside.
void rescale_model(ModelState& state, double lipschitz = 0.9);

Eigen::MatrixXd offdiagonal_mask(int d);

/// One draw of the relaxed Bernoulli masks. graph_* is d x d with a zero
/// diagonal; target_* is K x d with 1 = observed.
struct MaskSample {
  Eigen::MatrixXd graph_noise;
  Eigen::MatrixXd target_noise;
  Eigen::MatrixXd graph_soft;
  Eigen::MatrixXd graph_hard;
  Eigen::MatrixXd target_soft;
  Eigen::MatrixXd target_hard;
};

/// soft = sigmoid((logit + logistic noise) / tau), hard = 1[soft > 0.5].
MaskSample sample_masks(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& psi, double tau_graph,
                        double tau_target, Rng& rng);

/// Deterministic read-out: hard = 1[sigmoid(logit) > 0.5], noise zero.
MaskSample threshold_masks(const ModelState& state);

/// tanh((M .* W)^T x), or (M .* W)^T x for the linear activation.
Eigen::VectorXd masked_mechanism(const Eigen::VectorXd& x, const Eigen::MatrixXd& weights, const Eigen::MatrixXd& mask,
                                 MechanismKind activation = MechanismKind::TanhMlp);

/// f^(I_k)(x) = U f(x) + (I - U) f~(x) under hard masks, with preconditioning when enabled.
Eigen::VectorXd combined_mechanism(const Eigen::VectorXd& x, int k, const ModelState& state, const MaskSample& masks,
                                   const ModelConfig& config);
/// J(i, j) = d f^(I_k)_i / d x_j.
Eigen::MatrixXd combined_jacobian(const Eigen::VectorXd& x, int k, const ModelState& state, const MaskSample& masks,
                                  const ModelConfig& config);

/// Row-at-a-time log p_k(x) under the hard masks. In series mode `rng` must be
/// given; `draw` overrides the random draw when supplied.
double interventional_log_density(const Eigen::VectorXd& x, int k, const ModelState& state, const MaskSample& masks,
                                  const ModelConfig& config, LogdetMode mode, Rng* rng = nullptr,
                                  const SeriesDraw* draw = nullptr);

/// The model's parameters recorded on a tape.
struct ModelVars {
  ad::Var theta, theta_tilde, spline_obs, spline_int, phi, psi, log_lambda;
};

/// Records the parameters as variables. psi is a constant in known-target
/// mode and log_lambda unless preconditioning is enabled.
ModelVars record_parameters(ad::Tape& tape, const ModelState& state, const ModelConfig& config);

/// Random inputs of the batched series estimator: one cutoff per batch and
/// one probe row per sample.
struct BatchSeriesDraw {
  int terms = 1;
  Eigen::MatrixXd probes;  // B x d
};

BatchSeriesDraw draw_batch_series(Eigen::Index rows, int d, double poisson_mean, Rng& rng);

/// Per-row log densities (B x 1) for a batch. `series` is required in series mode.
ad::Var batch_log_density(ad::Tape& tape, const ModelVars& vars, const ModelState& state, const Eigen::MatrixXd& x,
                          std::span<const int> experiment, const MaskSample& masks, const ModelConfig& config,
                          LogdetMode mode, const BatchSeriesDraw* series);

struct LossWeights {
  double lambda_graph = 0.001;
  double lambda_target = 0.01;
};

struct BatchLoss {
  ad::Var loss;
  ad::Var log_density;  // B x 1
  ad::Var graph_penalty;
  ad::Var target_penalty;
};

/// -(1/B) sum log p + lambda_G sum sigmoid(phi)_offdiag + lambda_I sum (1 - sigmoid(psi)).
BatchLoss batch_loss(ad::Tape& tape, const ModelVars& vars, const ModelState& state, const Eigen::MatrixXd& x,
                     std::span<const int> experiment, const MaskSample& masks, const ModelConfig& config,
                     const LossWeights& weights, LogdetMode mode, const BatchSeriesDraw* series);

}  // namespace scout
