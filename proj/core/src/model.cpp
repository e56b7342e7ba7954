#include "scout/model.hpp"

#include <cmath>
#include <stdexcept>

#include "scout/errors.hpp"

namespace scout {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;
constexpr double kFrozenLogit = 30.0;

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& m) { return m.unaryExpr([](double v) { return sigmoid(v); }); }

bool is_linear(const ModelConfig& c) { return c.activation == MechanismKind::Linear; }

}  // namespace

std::string to_string(LogdetMode mode) { return mode == LogdetMode::Series ? "series" : "exact"; }

LogdetMode logdet_mode_from_string(const std::string& name) {
  if (name == "series") return LogdetMode::Series;
  if (name == "exact") return LogdetMode::Exact;
  throw ConfigError("unknown logdet mode '" + name + "' (expected series or exact)");
}

void ModelConfig::validate() const {
  if (!(tau_graph > 0) || !(tau_target > 0)) throw ConfigError("mask temperatures must be positive");
  if (!(poisson_mean > 0)) throw ConfigError("poisson mean must be positive");
  if (!(lipschitz > 0 && lipschitz < 1)) throw ConfigError("lipschitz bound must lie in (0,1)");
  if (!(init_range >= 0)) throw ConfigError("init range must be non-negative");
  if (spline.bins < 2 || !(spline.bound > 0) || !(spline.min_bin > 0) || spline.min_bin * spline.bins >= 1.0 ||
      !(spline.min_derivative > 0)) {
    throw ConfigError("invalid spline configuration");
  }
}

ModelState ModelState::init(int d, int num_experiments, const ModelConfig& config, Rng& rng) {
  config.validate();
  if (d < 1 || num_experiments < 1) throw ConfigError("model needs d >= 1 and at least one experiment");
  ModelState s;
  s.d = d;
  s.num_experiments = num_experiments;
  auto uniform = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.uniform(-config.init_range, config.init_range);
    return m;
  };
  s.theta = uniform(d, d);
  s.theta_tilde = uniform(d, d);
  s.spline_obs = identity_spline_params(d, config.spline);
  s.spline_int = identity_spline_params(d, config.spline);
  s.phi = Eigen::MatrixXd::Zero(d, d);
  s.psi = Eigen::MatrixXd::Zero(num_experiments, d);
  s.log_lambda = Eigen::VectorXd::Zero(d);
  rescale_model(s, config.lipschitz);
  return s;
}

void ModelState::validate() const {
  auto check = [](const Eigen::MatrixXd& m, Eigen::Index r, Eigen::Index c, const char* name) {
    if (m.rows() != r || m.cols() != c) throw ConfigError(std::string("model state: ") + name + " has the wrong shape");
    if (!m.allFinite()) throw NumericalError(std::string("model state: ") + name + " is not finite");
  };
  if (d < 1 || num_experiments < 1) throw ConfigError("model state: empty dimensions");
  check(theta, d, d, "theta");
  check(theta_tilde, d, d, "theta_tilde");
  check(spline_obs, d, spline_obs.cols(), "spline_obs");
  check(spline_int, d, spline_obs.cols(), "spline_int");
  check(phi, d, d, "phi");
  check(psi, num_experiments, d, "psi");
  if (log_lambda.size() != d || !log_lambda.allFinite()) throw ConfigError("model state: lambda has the wrong size");
}

Eigen::MatrixXd ModelState::edge_probabilities() const { return sigmoid(phi).cwiseProduct(offdiagonal_mask(d)); }

Eigen::MatrixXd ModelState::target_probabilities() const {
  return (1.0 - sigmoid(psi).array()).matrix();
}

void freeze_targets(ModelState& state, const Eigen::MatrixXi& intervened) {
  if (intervened.rows() != state.num_experiments || intervened.cols() != state.d) {
    throw ConfigError("known targets must be a K x d matrix matching the data");
  }
  state.psi = intervened.unaryExpr([](int v) { return v != 0 ? -kFrozenLogit : kFrozenLogit; });
  state.targets_known = true;
}

void rescale_model(ModelState& state, double lipschitz) {
  // The diagonal never enters a mechanism; keeping it at zero makes the bound
  // apply to the weights actually used.
  state.theta.diagonal().setZero();
  state.theta_tilde.diagonal().setZero();
  state.theta = rescale_to_lipschitz(state.theta, lipschitz);
  state.theta_tilde = rescale_to_lipschitz(state.theta_tilde, lipschitz);
}

Eigen::MatrixXd offdiagonal_mask(int d) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Ones(d, d);
  m.diagonal().setZero();
  return m;
}

MaskSample sample_masks(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& psi, double tau_graph,
                        double tau_target, Rng& rng) {
  if (!(tau_graph > 0) || !(tau_target > 0)) throw ConfigError("mask temperatures must be positive");
  if (phi.rows() != phi.cols()) throw std::invalid_argument("phi must be square");
  const int d = static_cast<int>(phi.rows());
  MaskSample s;
  s.graph_noise = sample_logistic(d, d, rng);
  s.target_noise = sample_logistic(psi.rows(), psi.cols(), rng);
  s.graph_soft = sigmoid(((phi + s.graph_noise) / tau_graph).eval()).cwiseProduct(offdiagonal_mask(d));
  s.target_soft = sigmoid(((psi + s.target_noise) / tau_target).eval());
  s.graph_hard = (s.graph_soft.array() > 0.5).cast<double>().matrix();
  s.target_hard = (s.target_soft.array() > 0.5).cast<double>().matrix();
  return s;
}

MaskSample threshold_masks(const ModelState& state) {
  MaskSample s;
  s.graph_noise = Eigen::MatrixXd::Zero(state.d, state.d);
  s.target_noise = Eigen::MatrixXd::Zero(state.num_experiments, state.d);
  s.graph_soft = state.edge_probabilities();
  s.target_soft = sigmoid(state.psi);
  s.graph_hard = (s.graph_soft.array() > 0.5).cast<double>().matrix();
  s.target_hard = (s.target_soft.array() > 0.5).cast<double>().matrix();
  return s;
}

Eigen::VectorXd masked_mechanism(const Eigen::VectorXd& x, const Eigen::MatrixXd& weights, const Eigen::MatrixXd& mask,
                                 MechanismKind activation) {
  const Eigen::VectorXd pre = mask.cwiseProduct(weights).transpose() * x;
  if (activation == MechanismKind::Linear) return pre;
  return pre.array().tanh().matrix();
}

namespace {

// Plain evaluation pieces shared by the row-wise density and Jacobian.
struct RowMechanism {
  Eigen::MatrixXd a, a_tilde;  // effective weights diag(lambda) (M .* W)
  Eigen::VectorXd inv_lambda;
  Eigen::VectorXd u;           // 1 = observed
  Eigen::VectorXd f, f_tilde;  // activations before the Lambda^{-1} factor
};

RowMechanism row_mechanism(const Eigen::VectorXd& x, int k, const ModelState& state, const MaskSample& masks,
                           const ModelConfig& config) {
  if (x.size() != state.d) throw std::invalid_argument("row has the wrong dimension");
  if (k < 0 || k >= state.num_experiments) throw std::invalid_argument("experiment index out of range");
  RowMechanism r;
  const Eigen::VectorXd lambda = config.precondition ? state.lambda_diag() : Eigen::VectorXd::Ones(state.d);
  r.inv_lambda = lambda.cwiseInverse();
  r.a = lambda.asDiagonal() * masks.graph_hard.cwiseProduct(state.theta);
  r.a_tilde = lambda.asDiagonal() * masks.graph_hard.cwiseProduct(state.theta_tilde);
  r.u = masks.target_hard.row(k).transpose();
  r.f = r.a.transpose() * x;
  r.f_tilde = r.a_tilde.transpose() * x;
  if (!is_linear(config)) {
    r.f = r.f.array().tanh().matrix();
    r.f_tilde = r.f_tilde.array().tanh().matrix();
  }
  return r;
}

Eigen::MatrixXd row_jacobian(const RowMechanism& r, const ModelConfig& config) {
  Eigen::VectorXd c1 = r.u.cwiseProduct(r.inv_lambda);
  Eigen::VectorXd c2 = (1.0 - r.u.array()).matrix().cwiseProduct(r.inv_lambda);
  if (!is_linear(config)) {
    c1.array() *= 1.0 - r.f.array().square();
    c2.array() *= 1.0 - r.f_tilde.array().square();
  }
  return c1.asDiagonal() * r.a.transpose() + c2.asDiagonal() * r.a_tilde.transpose();
}

}  // namespace

Eigen::VectorXd combined_mechanism(const Eigen::VectorXd& x, int k, const ModelState& state, const MaskSample& masks,
                                   const ModelConfig& config) {
  const RowMechanism r = row_mechanism(x, k, state, masks, config);
  const Eigen::ArrayXd u = r.u.array();
  return (r.inv_lambda.array() * (u * r.f.array() + (1.0 - u) * r.f_tilde.array())).matrix();
}

Eigen::MatrixXd combined_jacobian(const Eigen::VectorXd& x, int k, const ModelState& state, const MaskSample& masks,
                                  const ModelConfig& config) {
  return row_jacobian(row_mechanism(x, k, state, masks, config), config);
}

double interventional_log_density(const Eigen::VectorXd& x, int k, const ModelState& state, const MaskSample& masks,
                                  const ModelConfig& config, LogdetMode mode, Rng* rng, const SeriesDraw* draw) {
  const RowMechanism r = row_mechanism(x, k, state, masks, config);
  const Eigen::ArrayXd u = r.u.array();
  const Eigen::VectorXd fmix = (r.inv_lambda.array() * (u * r.f.array() + (1.0 - u) * r.f_tilde.array())).matrix();
  const Eigen::VectorXd e = x - fmix;
  double total = 0.0;
  for (int i = 0; i < state.d; ++i) {
    const Eigen::MatrixXd& params = r.u[i] > 0.5 ? state.spline_obs : state.spline_int;
    const SplineValue v = spline_forward(e[i], spline_knots(params.row(i), config.spline));
    total += -0.5 * v.z * v.z - kHalfLog2Pi + v.log_deriv;
  }
  const Eigen::MatrixXd jac = row_jacobian(r, config);
  if (mode == LogdetMode::Exact) {
    total += exact_logdet(jac);
  } else {
    const JvpOracle jvp = [&jac](const Eigen::VectorXd& v) -> Eigen::VectorXd { return jac * v; };
    if (draw != nullptr) {
      total += logdet_series(jvp, *draw, config.poisson_mean);
    } else {
      if (rng == nullptr) throw std::invalid_argument("series log-det needs a random generator");
      total += logdet_series_estimate(jvp, state.d, config.poisson_mean, *rng);
    }
  }
  return total;
}

ModelVars record_parameters(ad::Tape& tape, const ModelState& state, const ModelConfig& config) {
  ModelVars v;
  v.theta = tape.variable(state.theta);
  v.theta_tilde = tape.variable(state.theta_tilde);
  v.spline_obs = tape.variable(state.spline_obs);
  v.spline_int = tape.variable(state.spline_int);
  v.phi = tape.variable(state.phi);
  v.psi = state.targets_known ? tape.constant(state.psi) : tape.variable(state.psi);
  const Eigen::MatrixXd log_lambda_row = state.log_lambda.transpose();
  v.log_lambda = config.precondition ? tape.variable(log_lambda_row) : tape.constant(log_lambda_row);
  return v;
}

BatchSeriesDraw draw_batch_series(Eigen::Index rows, int d, double poisson_mean, Rng& rng) {
  BatchSeriesDraw s;
  s.terms = draw_series_terms(poisson_mean, rng);
  s.probes.resize(rows, d);
  for (Eigen::Index b = 0; b < rows; ++b)
    for (int j = 0; j < d; ++j) s.probes(b, j) = rng.normal();
  return s;
}

ad::Var batch_log_density(ad::Tape& tape, const ModelVars& vars, const ModelState& state, const Eigen::MatrixXd& x,
                          std::span<const int> experiment, const MaskSample& masks, const ModelConfig& config,
                          LogdetMode mode, const BatchSeriesDraw* series) {
  const int d = state.d;
  const Eigen::Index batch = x.rows();
  if (x.cols() != d || static_cast<Eigen::Index>(experiment.size()) != batch) {
    throw std::invalid_argument("batch rows and experiment tags disagree");
  }
  for (int k : experiment)
    if (k < 0 || k >= state.num_experiments) throw std::invalid_argument("experiment index out of range");
  if (mode == LogdetMode::Series && (series == nullptr || series->probes.rows() != batch)) {
    throw std::invalid_argument("series log-det needs one probe row per sample");
  }

  // Straight-through masks: the forward value is the hard sample, gradients
  // reach phi/psi through the relaxed sigmoid.
  const ad::Var graph_soft =
      ad::sigmoid(ad::affine(ad::add(vars.phi, tape.constant(masks.graph_noise)), 1.0 / config.tau_graph));
  const ad::Var m_graph = ad::mask(ad::straight_through(graph_soft, masks.graph_hard), offdiagonal_mask(d));
  ad::Var t_mask;
  if (state.targets_known) {
    t_mask = tape.constant(masks.target_hard);
  } else {
    const ad::Var target_soft =
        ad::sigmoid(ad::affine(ad::add(vars.psi, tape.constant(masks.target_noise)), 1.0 / config.tau_target));
    t_mask = ad::straight_through(target_soft, masks.target_hard);
  }

  ad::Var a = ad::mul(m_graph, vars.theta);
  ad::Var a_tilde = ad::mul(m_graph, vars.theta_tilde);
  ad::Var inv_lambda;
  if (config.precondition) {
    const ad::Var lambda_col = ad::exp(ad::transpose(vars.log_lambda));
    a = ad::mul(a, lambda_col);
    a_tilde = ad::mul(a_tilde, lambda_col);
    inv_lambda = ad::exp(ad::neg(vars.log_lambda));
  }

  const ad::Var xv = tape.constant(x);
  ad::Var f = ad::matmul(xv, a);
  ad::Var f_tilde = ad::matmul(xv, a_tilde);
  if (!is_linear(config)) {
    f = ad::tanh(f);
    f_tilde = ad::tanh(f_tilde);
  }

  const ad::Var u = ad::gather_rows(t_mask, experiment);
  const ad::Var not_u = ad::affine(u, -1.0, 1.0);
  ad::Var fmix = ad::add(ad::mul(u, f), ad::mul(not_u, f_tilde));
  if (config.precondition) fmix = ad::mul(fmix, inv_lambda);
  const ad::Var e = ad::sub(xv, fmix);

  const SplineVars g_obs = spline_forward(e, vars.spline_obs, config.spline);
  const SplineVars g_int = spline_forward(e, vars.spline_int, config.spline);
  const ad::Var z = ad::add(ad::mul(u, g_obs.z), ad::mul(not_u, g_int.z));
  const ad::Var spline_ld = ad::add(ad::mul(u, g_obs.log_deriv), ad::mul(not_u, g_int.log_deriv));
  const ad::Var log_normal = ad::affine(ad::square(z), -0.5, -kHalfLog2Pi);
  const ad::Var base = ad::row_sum(ad::add(log_normal, spline_ld));

  // Row b of the Jacobian is diag(c1_b) A^T + diag(c2_b) A~^T.
  ad::Var c1 = u;
  ad::Var c2 = not_u;
  if (!is_linear(config)) {
    c1 = ad::mul(c1, ad::affine(ad::square(f), -1.0, 1.0));
    c2 = ad::mul(c2, ad::affine(ad::square(f_tilde), -1.0, 1.0));
  }
  if (config.precondition) {
    c1 = ad::mul(c1, inv_lambda);
    c2 = ad::mul(c2, inv_lambda);
  }

  ad::Var logdet;
  if (mode == LogdetMode::Exact) {
    const ad::Var jac = ad::add(ad::scaled_transpose_rows(c1, a), ad::scaled_transpose_rows(c2, a_tilde));
    Eigen::MatrixXd eye_flat = Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(d) * d);
    for (int i = 0; i < d; ++i) eye_flat(0, i * d + i) = 1.0;
    logdet = ad::logdet_rows(ad::add(ad::neg(jac), tape.constant(eye_flat)), d);
  } else {
    const ad::Var w = tape.constant(series->probes);
    ad::Var v = w;
    for (int m = 1; m <= series->terms; ++m) {
      v = ad::add(ad::mul(c1, ad::matmul(v, a)), ad::mul(c2, ad::matmul(v, a_tilde)));
      const ad::Var term = ad::affine(ad::row_sum(ad::mul(w, v)), series_coefficient(m, config.poisson_mean));
      logdet = m == 1 ? term : ad::add(logdet, term);
    }
  }
  return ad::add(base, logdet);
}

BatchLoss batch_loss(ad::Tape& tape, const ModelVars& vars, const ModelState& state, const Eigen::MatrixXd& x,
                     std::span<const int> experiment, const MaskSample& masks, const ModelConfig& config,
                     const LossWeights& weights, LogdetMode mode, const BatchSeriesDraw* series) {
  BatchLoss out;
  out.log_density = batch_log_density(tape, vars, state, x, experiment, masks, config, mode, series);
  out.graph_penalty = ad::sum(ad::mask(ad::sigmoid(vars.phi), offdiagonal_mask(state.d)));
  out.target_penalty = ad::sum(ad::affine(ad::sigmoid(vars.psi), -1.0, 1.0));
  out.loss = ad::add(ad::affine(ad::mean(out.log_density), -1.0),
                     ad::add(ad::affine(out.graph_penalty, weights.lambda_graph),
                             ad::affine(out.target_penalty, weights.lambda_target)));
  return out;
}

}  // namespace scout
