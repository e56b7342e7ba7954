#pragma once

#include <vector>

#include <Eigen/Dense>

#include "scout/autodiff.hpp"

namespace scout {

/// Monotone rational-quadratic spline on [-bound, bound] with identity tails.
///
/// Raw parameters for one dimension are 3*bins - 1 unconstrained values:
/// bin-width logits (bins), bin-height logits (bins) and interior knot
/// derivatives (bins - 1). Widths/heights go through a softmax floored at
/// min_bin; derivatives through min_derivative + softplus. The two boundary
/// derivatives are pinned to 1 so the map is C1 with its linear tails.
struct SplineConfig {
  int bins = 8;
  double bound = 5.0;
  double min_bin = 1e-3;
  double min_derivative = 1e-3;

  int param_count() const { return 3 * bins - 1; }
};

struct SplineKnots {
  std::vector<double> x;      // bins + 1 knot positions, x[0] = -bound, x[bins] = bound
  std::vector<double> y;      // bins + 1 knot values
  std::vector<double> deriv;  // bins + 1 knot derivatives
};

struct SplineValue {
  double z = 0.0;
  double log_deriv = 0.0;
};

SplineKnots spline_knots(const Eigen::Ref<const Eigen::RowVectorXd>& raw, const SplineConfig& config);

SplineValue spline_forward(double e, const SplineKnots& knots);
double spline_inverse(double z, const SplineKnots& knots);

/// Raw parameters that make the spline the identity map.
Eigen::RowVectorXd identity_spline_params(const SplineConfig& config);
Eigen::MatrixXd identity_spline_params(int d, const SplineConfig& config);

struct SplineVars {
  ad::Var z;          // B x d
  ad::Var log_deriv;  // B x d
};

/// Applies dimension j's spline (row j of `raw`, d x param_count) to column j
/// of `e` (B x d), differentiably in both arguments.
SplineVars spline_forward(ad::Var e, ad::Var raw, const SplineConfig& config);

}  // namespace scout
