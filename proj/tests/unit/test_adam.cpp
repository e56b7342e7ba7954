#include <cmath>
#include <limits>

#include "doctest.h"
#include "scout/adam.hpp"
#include "scout/errors.hpp"

using namespace scout;

TEST_CASE("zero gradient leaves parameters unchanged") {
  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(2, 2, 1.5);
  const Eigen::MatrixXd before = p;
  AdamState st;
  Eigen::MatrixXd* params[] = {&p};
  const Eigen::MatrixXd grads[] = {Eigen::MatrixXd::Zero(2, 2)};
  for (int i = 0; i < 5; ++i) adam_step(params, grads, st, AdamConfig{});
  CHECK(p == before);
  CHECK(st.step == 5);
}

TEST_CASE("first step moves by lr times the gradient sign") {
  Eigen::MatrixXd p(1, 3);
  p << 0.0, 1.0, -1.0;
  AdamState st;
  Eigen::MatrixXd* params[] = {&p};
  Eigen::MatrixXd g(1, 3);
  g << 3.0, -0.01, 100.0;
  const Eigen::MatrixXd grads[] = {g};
  adam_step(params, grads, st, AdamConfig{0.1});
  CHECK(p(0) == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(p(1) == doctest::Approx(1.1).epsilon(1e-5));
  CHECK(p(2) == doctest::Approx(-1.1).epsilon(1e-6));
}

TEST_CASE("converges on a quadratic") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Constant(3, 1, 5.0);
  Eigen::MatrixXd b = Eigen::MatrixXd::Constant(1, 2, -4.0);
  AdamState st;
  Eigen::MatrixXd* params[] = {&a, &b};
  for (int i = 0; i < 3000; ++i) {
    const Eigen::MatrixXd grads[] = {2.0 * (a.array() - 1.0).matrix(), 2.0 * (b.array() + 2.0).matrix()};
    adam_step(params, grads, st, AdamConfig{0.05});
  }
  CHECK((a.array() - 1.0).abs().maxCoeff() < 1e-3);
  CHECK((b.array() + 2.0).abs().maxCoeff() < 1e-3);
}

TEST_CASE("non-finite gradients throw") {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(1, 1);
  AdamState st;
  Eigen::MatrixXd* params[] = {&p};
  const Eigen::MatrixXd grads[] = {Eigen::MatrixXd::Constant(1, 1, std::numeric_limits<double>::quiet_NaN())};
  CHECK_THROWS_AS(adam_step(params, grads, st, AdamConfig{}), NumericalError);
}
