#include "scout/sem.hpp"

#include <cmath>
#include <stdexcept>

#include "scout/errors.hpp"

namespace scout {

std::string to_string(MechanismKind kind) {
  return kind == MechanismKind::Linear ? "linear" : "nonlinear";
}

MechanismKind mechanism_kind_from_string(const std::string& name) {
  if (name == "linear") return MechanismKind::Linear;
  if (name == "nonlinear" || name == "tanh") return MechanismKind::TanhMlp;
  throw std::invalid_argument("unknown SEM kind '" + name + "'");
}

double spectral_norm(const Eigen::MatrixXd& w, double rel_tol, int max_iter) {
  if (!w.allFinite()) throw std::invalid_argument("spectral_norm: non-finite entries");
  if (w.size() == 0 || w.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  const Eigen::MatrixXd gram = w.transpose() * w;
  // Deterministic start with weight on every coordinate.
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(w.cols(), 1.0, 2.0).normalized();
  double estimate = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd next = gram * v;
    const double n = next.norm();
    if (n == 0.0) {
      // Start vector orthogonal to the row space; restart from a basis vector.
      v = Eigen::VectorXd::Unit(w.cols(), it % w.cols());
      continue;
    }
    v = next / n;
    const double sigma = std::sqrt((w * v).squaredNorm());
    if (it > 0 && std::abs(sigma - estimate) <= rel_tol * 1e-3 * sigma) {
      estimate = sigma;
      break;
    }
    estimate = sigma;
  }
  return estimate;
}

Eigen::MatrixXd rescale_to_lipschitz(const Eigen::MatrixXd& w, double lipschitz) {
  if (!(lipschitz > 0.0 && lipschitz < 1.0)) {
    throw std::invalid_argument("rescale_to_lipschitz: bound must lie in (0, 1)");
  }
  if (!w.allFinite()) throw std::invalid_argument("rescale_to_lipschitz: non-finite entries");
  const double sigma = spectral_norm(w);
  if (sigma > lipschitz) return w * (lipschitz / sigma);
  return w;
}

Eigen::MatrixXd sample_edge_weights(const DirectedGraph& g, Rng& rng, double lo, double hi) {
  const int d = g.size();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (!g.has_edge(i, j)) continue;
      const double magnitude = rng.uniform(lo, hi);
      w(i, j) = rng.uniform() < 0.5 ? -magnitude : magnitude;
    }
  }
  return w;
}

void GroundTruthSem::validate() const {
  const int d = graph.size();
  if (weights.rows() != d || weights.cols() != d) throw std::invalid_argument("SEM: weight shape mismatch");
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (!graph.has_edge(i, j) && weights(i, j) != 0.0)
        throw std::invalid_argument("SEM: nonzero weight on a non-edge");
  if (!(lipschitz > 0 && lipschitz < 1)) throw std::invalid_argument("SEM: Lipschitz bound must lie in (0,1)");
  noise.validate();
}

GroundTruthSem make_sem(const DirectedGraph& graph, MechanismKind kind, const NoiseFamily& noise,
                        double lipschitz, Rng& rng) {
  noise.validate();
  GroundTruthSem sem;
  sem.graph = graph;
  sem.kind = kind;
  sem.lipschitz = lipschitz;
  sem.noise = noise;
  sem.weights = rescale_to_lipschitz(sample_edge_weights(graph, rng), lipschitz);
  return sem;
}

Eigen::VectorXd mechanism_eval(const GroundTruthSem& sem, const Eigen::VectorXd& x) {
  Eigen::VectorXd h = sem.weights.transpose() * x;
  if (sem.kind == MechanismKind::TanhMlp) h = h.array().tanh();
  return h;
}

Eigen::MatrixXd mechanism_jacobian(const GroundTruthSem& sem, const Eigen::VectorXd& x) {
  Eigen::MatrixXd j = sem.weights.transpose();
  if (sem.kind == MechanismKind::TanhMlp) {
    const Eigen::ArrayXd t = (sem.weights.transpose() * x).array().tanh();
    j = (1.0 - t.square()).matrix().asDiagonal() * j;
  }
  return j;
}

std::string to_string(InterventionKind kind) {
  switch (kind) {
    case InterventionKind::None: return "none";
    case InterventionKind::Shift: return "shift";
    case InterventionKind::Scale: return "scale";
    case InterventionKind::NoisyFunction: return "noisy";
    case InterventionKind::Hard: return "hard";
  }
  return "unknown";
}

InterventionKind intervention_kind_from_string(const std::string& name) {
  if (name == "none") return InterventionKind::None;
  if (name == "shift") return InterventionKind::Shift;
  if (name == "scale") return InterventionKind::Scale;
  if (name == "noisy" || name == "noisy-function" || name == "noisy_function") return InterventionKind::NoisyFunction;
  if (name == "hard") return InterventionKind::Hard;
  throw std::invalid_argument("unknown intervention kind '" + name + "'");
}

void InterventionSpec::validate(int d) const {
  if (kind == InterventionKind::NoisyFunction && std::abs(alpha) > 1.0) {
    throw std::invalid_argument("noisy-function multiplier must satisfy |alpha| <= 1 to stay contractive");
  }
  if (!std::isfinite(shift) || !std::isfinite(scale) || !std::isfinite(alpha) || !std::isfinite(hard_shift)) {
    throw std::invalid_argument("intervention parameters must be finite");
  }
  if (targets.empty()) throw std::invalid_argument("intervention design has no experiments");
  for (const auto& set : targets) {
    std::vector<char> seen(d, 0);
    for (int v : set) {
      if (v < 0 || v >= d) throw std::invalid_argument("intervention target out of range");
      if (seen[v]) throw std::invalid_argument("duplicate intervention target");
      seen[v] = 1;
    }
  }
}

Eigen::MatrixXi InterventionSpec::target_matrix(int d) const {
  Eigen::MatrixXi t = Eigen::MatrixXi::Zero(num_experiments(), d);
  if (kind == InterventionKind::None) return t;
  for (int k = 0; k < num_experiments(); ++k)
    for (int v : targets[k]) t(k, v) = 1;
  return t;
}

std::vector<NodeSet> InterventionSpec::single_node_design(int d, bool with_observational) {
  std::vector<NodeSet> out;
  if (with_observational) out.emplace_back();
  for (int i = 0; i < d; ++i) out.push_back({i});
  return out;
}

ExperimentMechanism::ExperimentMechanism(const GroundTruthSem& sem, const InterventionSpec& spec, int experiment)
    : sem_(&sem), spec_(spec), target_(sem.size(), 0), row_scale_(Eigen::VectorXd::Ones(sem.size())) {
  const int d = sem.size();
  spec.validate(d);
  if (experiment < 0 || experiment >= spec.num_experiments()) {
    throw std::out_of_range("apply_intervention: experiment index out of range");
  }
  if (spec.kind == InterventionKind::None) return;
  for (int v : spec.targets[experiment]) {
    target_[v] = 1;
    if (spec.kind == InterventionKind::NoisyFunction) row_scale_[v] = spec.alpha;
    if (spec.kind == InterventionKind::Hard) row_scale_[v] = 0.0;
  }
}

Eigen::VectorXd ExperimentMechanism::evaluate(const Eigen::VectorXd& x) const {
  return row_scale_.cwiseProduct(mechanism_eval(*sem_, x));
}

Eigen::MatrixXd ExperimentMechanism::jacobian(const Eigen::VectorXd& x) const {
  return row_scale_.asDiagonal() * mechanism_jacobian(*sem_, x);
}

Eigen::VectorXd ExperimentMechanism::sample_noise(Rng& rng) const {
  const int d = sem_->size();
  Eigen::VectorXd eta(d);
  for (int i = 0; i < d; ++i) {
    const double eps = scout::sample_noise(sem_->noise, rng);
    if (!target_[i]) {
      eta[i] = eps;
      continue;
    }
    switch (spec_.kind) {
      case InterventionKind::Shift: eta[i] = spec_.shift + eps; break;
      case InterventionKind::Scale: eta[i] = spec_.scale * eps; break;
      case InterventionKind::Hard: eta[i] = spec_.hard_shift + eps; break;
      case InterventionKind::NoisyFunction:
      case InterventionKind::None: eta[i] = eps; break;
    }
  }
  return eta;
}

Mechanism ExperimentMechanism::as_function() const {
  return [self = *this](const Eigen::VectorXd& x) { return self.evaluate(x); };
}

ExperimentMechanism apply_intervention(const GroundTruthSem& sem, const InterventionSpec& spec, int experiment) {
  return ExperimentMechanism(sem, spec, experiment);
}

FixedPointResult solve_fixed_point(const Mechanism& f, const Eigen::VectorXd& eta, double tol, int max_iter) {
  FixedPointResult r;
  r.x = Eigen::VectorXd::Zero(eta.size());
  for (int it = 0; it <= max_iter; ++it) {
    const Eigen::VectorXd next = f(r.x) + eta;
    r.residual = (r.x - next).lpNorm<Eigen::Infinity>();
    r.iterations = it;
    if (!std::isfinite(r.residual)) break;
    if (r.residual <= tol) return r;
    r.x = next;
  }
  throw NumericalError("fixed-point iteration did not converge within " + std::to_string(max_iter) +
                       " iterations (residual " + std::to_string(r.residual) +
                       "); the mechanism is probably not contractive");
}

int banach_iteration_bound(double lipschitz, double eta_norm, double tol) {
  if (eta_norm <= tol) return 0;
  return static_cast<int>(std::ceil(std::log(tol * (1.0 - lipschitz) / eta_norm) / std::log(lipschitz)));
}

Mechanism precondition(Mechanism f, const Eigen::VectorXd& lambda_diag) {
  if ((lambda_diag.array() <= 0.0).any() || !lambda_diag.allFinite()) {
    throw std::invalid_argument("precondition: diagonal entries must be positive");
  }
  return [f = std::move(f), lambda = lambda_diag](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return f(lambda.cwiseProduct(x)).cwiseQuotient(lambda);
  };
}

}  // namespace scout
