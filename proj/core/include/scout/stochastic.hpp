#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace scout {

/// Seeded generator with named, independent substreams.
///
/// A substream is derived by hashing (seed, name, index) through SplitMix64, so
/// the stream a component sees depends only on the root seed and the label it
/// asks for, never on how many draws other components made first. That keeps
/// per-experiment data generation deterministic under any thread schedule.
class Rng {
 public:
  using engine_type = std::mt19937_64;

  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }
  /// Number of substreams handed out so far (informational).
  std::uint64_t stream_counter() const { return counter_; }

  Rng substream(std::string_view name, std::uint64_t index = 0) const;

  engine_type& engine() { return engine_; }

  double uniform();                      // U(0,1), never exactly 0 or 1
  double uniform(double lo, double hi);  // U[lo,hi)
  double normal();
  std::uint64_t uniform_index(std::uint64_t n);

 private:
  std::uint64_t seed_;
  mutable std::uint64_t counter_ = 0;
  engine_type engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

enum class NoiseKind { Gaussian, Exponential, Gumbel };

/// Gaussian: (mean, variance). Exponential: (rate, unused). Gumbel: (location, scale).
struct NoiseFamily {
  NoiseKind kind = NoiseKind::Gaussian;
  double param1 = 0.0;
  double param2 = 0.25;

  static NoiseFamily gaussian(double mean, double variance) { return {NoiseKind::Gaussian, mean, variance}; }
  static NoiseFamily exponential(double rate) { return {NoiseKind::Exponential, rate, 0.0}; }
  static NoiseFamily gumbel(double location, double scale) { return {NoiseKind::Gumbel, location, scale}; }

  void validate() const;
  double mean() const;
  double variance() const;
  double cdf(double x) const;
};

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(std::string_view name);

/// rows x cols i.i.d. draws.
Eigen::MatrixXd sample_noise(const NoiseFamily& family, Eigen::Index rows, Eigen::Index cols, Rng& rng);
double sample_noise(const NoiseFamily& family, Rng& rng);

/// log U - log(1-U). Difference of two standard Gumbels; the binary-concrete noise.
double sample_logistic(Rng& rng);
double logistic_from_uniform(double u);
Eigen::MatrixXd sample_logistic(Eigen::Index rows, Eigen::Index cols, Rng& rng);

int sample_poisson(double mean, Rng& rng);

/// P(N >= m) for N ~ Poisson(mean).
double poisson_survival(double mean, int m);

}  // namespace scout
