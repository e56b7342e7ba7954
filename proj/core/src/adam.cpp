#include "scout/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "scout/errors.hpp"

namespace scout {

void adam_step(std::span<Eigen::MatrixXd* const> params, std::span<const Eigen::MatrixXd> grads, AdamState& state,
               const AdamConfig& config) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam_step: parameter/gradient count mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].rows() != params[i]->rows() || grads[i].cols() != params[i]->cols()) {
      throw std::invalid_argument("adam_step: gradient shape mismatch for group " + std::to_string(i));
    }
    if (!grads[i].allFinite()) throw NumericalError("adam_step: non-finite gradient in group " + std::to_string(i));
  }
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
      state.v.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
    }
  }
  if (state.m.size() != params.size()) throw std::invalid_argument("adam_step: state does not match parameter groups");

  ++state.step;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.m[i];
    auto& v = state.v[i];
    m = config.beta1 * m + (1.0 - config.beta1) * grads[i];
    v = config.beta2 * v + (1.0 - config.beta2) * grads[i].cwiseAbs2();
    params[i]->array() -= config.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + config.eps);
  }
}

}  // namespace scout
