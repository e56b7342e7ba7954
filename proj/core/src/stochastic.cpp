#include "scout/stochastic.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace scout {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

// FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t hash_name(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

Rng Rng::substream(std::string_view name, std::uint64_t index) const {
  ++counter_;
  std::uint64_t s = splitmix64(seed_ ^ splitmix64(hash_name(name)));
  s = splitmix64(s ^ splitmix64(index + 0x632be59bd9b4e019ULL));
  return Rng(s);
}

double Rng::uniform() {
  // 53 random bits mapped to the open interval (0,1).
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(engine_);
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  std::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
  return dist(engine_);
}

void NoiseFamily::validate() const {
  if (!std::isfinite(param1) || !std::isfinite(param2)) {
    throw std::invalid_argument("noise family: parameters must be finite");
  }
  switch (kind) {
    case NoiseKind::Gaussian:
      if (param2 <= 0) throw std::invalid_argument("noise family: Gaussian variance must be > 0");
      break;
    case NoiseKind::Exponential:
      if (param1 <= 0) throw std::invalid_argument("noise family: Exponential rate must be > 0");
      break;
    case NoiseKind::Gumbel:
      if (param2 <= 0) throw std::invalid_argument("noise family: Gumbel scale must be > 0");
      break;
  }
}

double NoiseFamily::mean() const {
  switch (kind) {
    case NoiseKind::Gaussian: return param1;
    case NoiseKind::Exponential: return 1.0 / param1;
    case NoiseKind::Gumbel: return param1 + param2 * std::numbers::egamma;
  }
  return 0.0;
}

double NoiseFamily::variance() const {
  switch (kind) {
    case NoiseKind::Gaussian: return param2;
    case NoiseKind::Exponential: return 1.0 / (param1 * param1);
    case NoiseKind::Gumbel: return std::numbers::pi * std::numbers::pi / 6.0 * param2 * param2;
  }
  return 0.0;
}

double NoiseFamily::cdf(double x) const {
  switch (kind) {
    case NoiseKind::Gaussian:
      return 0.5 * std::erfc(-(x - param1) / std::sqrt(2.0 * param2));
    case NoiseKind::Exponential:
      return x <= 0 ? 0.0 : 1.0 - std::exp(-param1 * x);
    case NoiseKind::Gumbel:
      return std::exp(-std::exp(-(x - param1) / param2));
  }
  return 0.0;
}

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::Gaussian: return "gaussian";
    case NoiseKind::Exponential: return "exponential";
    case NoiseKind::Gumbel: return "gumbel";
  }
  return "unknown";
}

NoiseKind noise_kind_from_string(std::string_view name) {
  if (name == "gaussian") return NoiseKind::Gaussian;
  if (name == "exponential") return NoiseKind::Exponential;
  if (name == "gumbel") return NoiseKind::Gumbel;
  throw std::invalid_argument("unknown noise family '" + std::string(name) + "'");
}

double sample_noise(const NoiseFamily& family, Rng& rng) {
  family.validate();
  switch (family.kind) {
    case NoiseKind::Gaussian:
      return family.param1 + std::sqrt(family.param2) * rng.normal();
    case NoiseKind::Exponential: {
      std::exponential_distribution<double> dist(family.param1);
      return dist(rng.engine());
    }
    case NoiseKind::Gumbel: {
      std::extreme_value_distribution<double> dist(family.param1, family.param2);
      return dist(rng.engine());
    }
  }
  return 0.0;
}

Eigen::MatrixXd sample_noise(const NoiseFamily& family, Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  family.validate();
  Eigen::MatrixXd out(rows, cols);
  // Row-major fill order so the draw sequence does not depend on storage order.
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = sample_noise(family, rng);
  }
  return out;
}

double logistic_from_uniform(double u) { return std::log(u) - std::log1p(-u); }

double sample_logistic(Rng& rng) { return logistic_from_uniform(rng.uniform()); }

Eigen::MatrixXd sample_logistic(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = sample_logistic(rng);
  }
  return out;
}

int sample_poisson(double mean, Rng& rng) {
  if (!(mean > 0) || !std::isfinite(mean)) {
    throw std::invalid_argument("sample_poisson: mean must be positive and finite");
  }
  std::poisson_distribution<int> dist(mean);
  return dist(rng.engine());
}

double poisson_survival(double mean, int m) {
  if (m <= 0) return 1.0;
  // 1 - sum_{j<m} e^{-mean} mean^j / j!
  double term = std::exp(-mean);
  double cdf = 0.0;
  for (int j = 0; j < m; ++j) {
    cdf += term;
    term *= mean / (j + 1);
  }
  double surv = 1.0 - cdf;
  if (surv < 1e-12) {
    // Tail sum directly once cancellation dominates.
    surv = 0.0;
    double t = std::exp(-mean);
    for (int j = 1; j <= m; ++j) t *= mean / j;
    for (int j = m; j < m + 200 && t > 0; ++j) {
      surv += t;
      t *= mean / (j + 1);
    }
  }
  return surv;
}

}  // namespace scout
