#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "scout/autodiff.hpp"

namespace testing {

using Builder = std::function<scout::ad::Var(scout::ad::Tape&, std::span<const scout::ad::Var>)>;

struct GradCheck {
  double max_abs_error = 0.0;
  double max_scaled_error = 0.0;  // |analytic - numeric| / (atol + |numeric|)
};

// Compares reverse-mode gradients of a scalar-valued builder against central
// differences in every input coordinate.
inline GradCheck check_gradients(const Builder& build, const std::vector<Eigen::MatrixXd>& inputs, double h = 1e-6,
                                 double atol = 1e-6) {
  std::vector<Eigen::MatrixXd> analytic;
  {
    scout::ad::Tape tape;
    std::vector<scout::ad::Var> vars;
    for (const auto& m : inputs) vars.push_back(tape.variable(m));
    scout::ad::Var out = build(tape, vars);
    tape.backward(out);
    for (const auto& v : vars) analytic.push_back(v.grad());
  }
  auto eval = [&](const std::vector<Eigen::MatrixXd>& in) {
    scout::ad::Tape tape;
    std::vector<scout::ad::Var> vars;
    for (const auto& m : in) vars.push_back(tape.variable(m));
    return build(tape, vars).scalar();
  };
  GradCheck result;
  std::vector<Eigen::MatrixXd> work = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (Eigen::Index i = 0; i < inputs[k].size(); ++i) {
      const double orig = work[k](i);
      work[k](i) = orig + h;
      const double up = eval(work);
      work[k](i) = orig - h;
      const double down = eval(work);
      work[k](i) = orig;
      const double numeric = (up - down) / (2 * h);
      const double err = std::abs(analytic[k](i) - numeric);
      result.max_abs_error = std::max(result.max_abs_error, err);
      result.max_scaled_error = std::max(result.max_scaled_error, err / (atol + std::abs(numeric)));
    }
  }
  return result;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, unsigned seed, double scale = 1.0) {
  std::srand(seed);
  return Eigen::MatrixXd::Random(r, c) * scale;
}

}  // namespace testing
