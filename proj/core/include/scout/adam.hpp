#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace scout {

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment estimates, one pair per parameter group.
struct AdamState {
  std::vector<Eigen::MatrixXd> m;
  std::vector<Eigen::MatrixXd> v;
  long step = 0;
};

/// One bias-corrected Adam update applied in place. Moments are zero-initialised
/// on first use. Throws NumericalError on non-finite gradients.
void adam_step(std::span<Eigen::MatrixXd* const> params, std::span<const Eigen::MatrixXd> grads, AdamState& state,
               const AdamConfig& config);

}  // namespace scout
