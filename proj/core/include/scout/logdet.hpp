#pragma once

#include <functional>

#include <Eigen/Dense>

#include "scout/stochastic.hpp"

namespace scout {

/// v -> J v for a fixed Jacobian J.
using JvpOracle = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Random pieces of one series estimate: the cutoff n ~ max(Poisson(mean), 1)
/// and a standard-normal probe w.
struct SeriesDraw {
  int terms = 1;
  Eigen::VectorXd probe;
};

SeriesDraw draw_series(int d, double poisson_mean, Rng& rng);

/// Cutoff n ~ max(Poisson(mean), 1).
int draw_series_terms(double poisson_mean, Rng& rng);

/// Coefficient multiplying w^T J^m w: -1 / (m * P(n >= m)) with n the clamped
/// cutoff above, so P(n >= 1) = 1 and P(n >= m) = P(Poisson >= m) for m >= 2.
double series_coefficient(int m, double poisson_mean);

/// -sum_{m=1}^{n} w^T J^m w / (m P(n >= m)) for a given draw.
double logdet_series(const JvpOracle& jvp, const SeriesDraw& draw, double poisson_mean);

/// Unbiased estimate of log det(I - J) for spectral radius(J) < 1.
double logdet_series_estimate(const JvpOracle& jvp, int d, double poisson_mean, Rng& rng);

/// log|det(I - J)| by partial-pivot LU. Throws NumericalError when I - J is singular.
double exact_logdet(const Eigen::MatrixXd& jacobian);

struct LogdetStats {
  double exact = 0.0;
  double mean = 0.0;
  double variance = 0.0;  // sample variance of single-draw estimates
  double standard_error = 0.0;
  long draws = 0;

  /// |mean - exact| / standard_error, or 0 when both the error and the spread vanish.
  double z_score() const;
};

/// Repeats the series estimate `draws` times on a dense J.
LogdetStats logdet_statistics(const Eigen::MatrixXd& jacobian, long draws, double poisson_mean, Rng& rng);

}  // namespace scout
