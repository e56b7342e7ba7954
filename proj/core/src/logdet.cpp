#include "scout/logdet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "scout/errors.hpp"

namespace scout {

int draw_series_terms(double poisson_mean, Rng& rng) { return std::max(sample_poisson(poisson_mean, rng), 1); }

SeriesDraw draw_series(int d, double poisson_mean, Rng& rng) {
  SeriesDraw draw;
  draw.terms = draw_series_terms(poisson_mean, rng);
  draw.probe.resize(d);
  for (int i = 0; i < d; ++i) draw.probe[i] = rng.normal();
  return draw;
}

double series_coefficient(int m, double poisson_mean) {
  if (m < 1) throw std::invalid_argument("series term index must be >= 1");
  const double survival = m == 1 ? 1.0 : poisson_survival(poisson_mean, m);
  return -1.0 / (static_cast<double>(m) * survival);
}

double logdet_series(const JvpOracle& jvp, const SeriesDraw& draw, double poisson_mean) {
  Eigen::VectorXd v = draw.probe;
  double total = 0.0;
  for (int m = 1; m <= draw.terms; ++m) {
    v = jvp(v);
    total += series_coefficient(m, poisson_mean) * draw.probe.dot(v);
  }
  return total;
}

double logdet_series_estimate(const JvpOracle& jvp, int d, double poisson_mean, Rng& rng) {
  return logdet_series(jvp, draw_series(d, poisson_mean, rng), poisson_mean);
}

double exact_logdet(const Eigen::MatrixXd& jacobian) {
  if (jacobian.rows() != jacobian.cols()) throw std::invalid_argument("exact_logdet: Jacobian must be square");
  if (jacobian.rows() > 64) throw std::invalid_argument("exact_logdet: supported for d <= 64");
  const Eigen::Index d = jacobian.rows();
  if (d == 0) return 0.0;
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(d, d) - jacobian;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const Eigen::MatrixXd& packed = lu.matrixLU();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double u = std::abs(packed(i, i));
    if (!(u > 1e-300)) throw NumericalError("exact_logdet: I - J is singular");
    acc += std::log(u);
  }
  return acc;
}

double LogdetStats::z_score() const {
  const double err = std::abs(mean - exact);
  if (standard_error > 0) return err / standard_error;
  return err == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

LogdetStats logdet_statistics(const Eigen::MatrixXd& jacobian, long draws, double poisson_mean, Rng& rng) {
  if (draws < 2) throw std::invalid_argument("logdet_statistics: need at least two draws");
  LogdetStats stats;
  stats.exact = exact_logdet(jacobian);
  stats.draws = draws;
  const JvpOracle jvp = [&jacobian](const Eigen::VectorXd& v) -> Eigen::VectorXd { return jacobian * v; };
  // Welford keeps the variance accurate when the mean is large.
  double mean = 0.0, m2 = 0.0;
  for (long i = 0; i < draws; ++i) {
    const double x = logdet_series_estimate(jvp, static_cast<int>(jacobian.rows()), poisson_mean, rng);
    const double delta = x - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (x - mean);
  }
  stats.mean = mean;
  stats.variance = m2 / static_cast<double>(draws - 1);
  stats.standard_error = std::sqrt(stats.variance / static_cast<double>(draws));
  return stats;
}

}  // namespace scout
