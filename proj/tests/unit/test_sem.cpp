#include <cmath>

#include <Eigen/SVD>

#include "doctest.h"
#include "scout/errors.hpp"
#include "scout/sem.hpp"

using namespace scout;

namespace {

double svd_norm(const Eigen::MatrixXd& w) { return Eigen::JacobiSVD<Eigen::MatrixXd>(w).singularValues()(0); }

GroundTruthSem chain_sem(MechanismKind kind) {
  GroundTruthSem sem;
  sem.graph = DirectedGraph::from_edges(3, {{0, 1}, {1, 2}});
  sem.kind = kind;
  sem.weights = Eigen::MatrixXd::Zero(3, 3);
  sem.weights(0, 1) = 0.5;
  sem.weights(1, 2) = -0.8;
  sem.noise = NoiseFamily::gaussian(0.0, 0.25);
  return sem;
}

}  // namespace

TEST_CASE("spectral norm matches an SVD oracle") {
  for (unsigned seed = 1; seed <= 20; ++seed) {
    std::srand(seed);
    const Eigen::MatrixXd w = Eigen::MatrixXd::Random(7, 7);
    const double ref = svd_norm(w);
    CHECK(std::abs(spectral_norm(w) - ref) <= 1e-6 * ref);
  }
  CHECK(spectral_norm(Eigen::MatrixXd::Zero(3, 3)) == 0.0);
}

TEST_CASE("rescale only shrinks matrices above the bound") {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 2);
  w(0, 1) = 3.0;
  const Eigen::MatrixXd r = rescale_to_lipschitz(w, 0.9);
  CHECK(r(0, 1) == doctest::Approx(0.9).epsilon(1e-9));
  w(0, 1) = 0.5;
  CHECK(rescale_to_lipschitz(w, 0.9) == w);
  std::srand(7);
  for (int t = 0; t < 10; ++t) {
    const Eigen::MatrixXd m = 2.0 * Eigen::MatrixXd::Random(10, 10);
    CHECK(svd_norm(rescale_to_lipschitz(m, 0.9)) <= 0.9 * (1 + 1e-6));
  }
}

TEST_CASE("sampled weights sit on graph edges inside the interval") {
  Rng rng(5);
  const DirectedGraph g = er_sample(20, 2.0, rng);
  const Eigen::MatrixXd w = sample_edge_weights(g, rng);
  int pos = 0, neg = 0;
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) {
      if (!g.has_edge(i, j)) {
        CHECK(w(i, j) == 0.0);
        continue;
      }
      CHECK(std::abs(w(i, j)) >= 0.2);
      CHECK(std::abs(w(i, j)) <= 0.9);
      (w(i, j) > 0 ? pos : neg)++;
    }
  CHECK(pos > 0);
  CHECK(neg > 0);
}

TEST_CASE("make_sem respects the Lipschitz bound") {
  Rng rng(9);
  for (int t = 0; t < 10; ++t) {
    const DirectedGraph g = er_sample(15, 4.0, rng);
    const GroundTruthSem sem = make_sem(g, MechanismKind::TanhMlp, NoiseFamily{}, 0.9, rng);
    CHECK(svd_norm(sem.weights) <= 0.9 * (1 + 1e-6));
    for (int i = 0; i < 15; ++i)
      for (int j = 0; j < 15; ++j)
        if (!g.has_edge(i, j)) CHECK(sem.weights(i, j) == 0.0);
  }
}

TEST_CASE("mechanisms and Jacobians on a chain") {
  const Eigen::Vector3d x(1.0, 2.0, -1.0);
  const auto lin = chain_sem(MechanismKind::Linear);
  const Eigen::VectorXd fl = mechanism_eval(lin, x);
  CHECK(fl(0) == 0.0);
  CHECK(fl(1) == doctest::Approx(0.5));
  CHECK(fl(2) == doctest::Approx(-1.6));
  const auto nl = chain_sem(MechanismKind::TanhMlp);
  const Eigen::VectorXd fn = mechanism_eval(nl, x);
  CHECK(fn(2) == doctest::Approx(std::tanh(-1.6)));
  const Eigen::MatrixXd j = mechanism_jacobian(nl, x);
  CHECK(j(1, 0) == doctest::Approx(0.5 * (1 - std::pow(std::tanh(0.5), 2))));
  CHECK(j(0, 1) == 0.0);
  // finite differences
  for (int c = 0; c < 3; ++c) {
    Eigen::VectorXd xp = x, xm = x;
    xp(c) += 1e-6;
    xm(c) -= 1e-6;
    const Eigen::VectorXd fd = (mechanism_eval(nl, xp) - mechanism_eval(nl, xm)) / 2e-6;
    CHECK((fd - j.col(c)).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("interventions change only the targeted coordinates") {
  const auto sem = chain_sem(MechanismKind::TanhMlp);
  const Eigen::Vector3d x(0.3, -0.7, 1.1);
  InterventionSpec spec;
  spec.targets = {{}, {1}};
  spec.kind = InterventionKind::NoisyFunction;
  spec.alpha = -0.5;
  const ExperimentMechanism obs(sem, spec, 0), noisy(sem, spec, 1);
  const Eigen::VectorXd f = mechanism_eval(sem, x);
  CHECK((obs.evaluate(x) - f).norm() == 0.0);
  const Eigen::VectorXd g = noisy.evaluate(x);
  CHECK(g(0) == f(0));
  CHECK(g(2) == f(2));
  CHECK(g(1) == doctest::Approx(-0.5 * f(1)));
  CHECK(noisy.is_target(1));
  CHECK_FALSE(noisy.is_target(0));

  spec.kind = InterventionKind::Hard;
  const ExperimentMechanism hard(sem, spec, 1);
  CHECK(hard.evaluate(x)(1) == 0.0);
  CHECK(hard.jacobian(x).row(1).norm() == 0.0);

  spec.kind = InterventionKind::Shift;
  spec.shift = 2.0;
  const ExperimentMechanism shift(sem, spec, 1);
  Rng rng(1);
  double on = 0.0, off = 0.0;
  const int n = 20000;
  for (int s = 0; s < n; ++s) {
    const Eigen::VectorXd eta = shift.sample_noise(rng);
    on += eta(1);
    off += eta(0);
  }
  CHECK(on / n == doctest::Approx(2.0).epsilon(0.01));
  CHECK(std::abs(off / n) < 0.02);

  spec.kind = InterventionKind::Scale;
  spec.scale = 2.0;
  const ExperimentMechanism scale(sem, spec, 1);
  double sq = 0.0;
  for (int s = 0; s < n; ++s) sq += std::pow(scale.sample_noise(rng)(1), 2);
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.03));  // 4 * 0.25
}

TEST_CASE("invalid intervention specs are rejected") {
  InterventionSpec spec;
  spec.targets = {{5}};
  CHECK_THROWS(spec.validate(3));
  spec.targets = {{0}};
  spec.kind = InterventionKind::NoisyFunction;
  spec.alpha = 1.5;
  CHECK_THROWS(spec.validate(3));
  CHECK_THROWS(intervention_kind_from_string("bogus"));
}

TEST_CASE("single-node design") {
  const auto a = InterventionSpec::single_node_design(3, false);
  REQUIRE(a.size() == 3);
  CHECK(a[2] == NodeSet{2});
  const auto b = InterventionSpec::single_node_design(3, true);
  REQUIRE(b.size() == 4);
  CHECK(b[0].empty());
}

TEST_CASE("fixed point matches the linear solve and Banach bound") {
  Rng rng(11);
  const DirectedGraph g = er_sample(8, 3.0, rng);
  const GroundTruthSem sem = make_sem(g, MechanismKind::Linear, NoiseFamily{}, 0.9, rng);
  const Eigen::VectorXd eta = Eigen::VectorXd::Random(8);
  const auto r = solve_fixed_point([&](const Eigen::VectorXd& x) { return mechanism_eval(sem, x); }, eta);
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(8, 8) - sem.weights.transpose();
  const Eigen::VectorXd exact = a.partialPivLu().solve(eta);
  CHECK((r.x - exact).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(r.residual <= 1e-10);
  CHECK(r.iterations <= banach_iteration_bound(0.9, eta.cwiseAbs().maxCoeff() * std::sqrt(8.0), 1e-10) + 1);
}

TEST_CASE("non-contractive maps raise NumericalError") {
  const Mechanism f = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(2.0 * x); };
  CHECK_THROWS_AS(solve_fixed_point(f, Eigen::VectorXd::Ones(2), 1e-10, 50), NumericalError);
}

TEST_CASE("preconditioning conjugates by the diagonal") {
  const auto sem = chain_sem(MechanismKind::TanhMlp);
  const Mechanism f = [&](const Eigen::VectorXd& x) { return mechanism_eval(sem, x); };
  const Eigen::Vector3d lambda(0.5, 2.0, 4.0);
  const Mechanism h = precondition(f, lambda);
  const Eigen::Vector3d x(0.1, -0.3, 0.2);
  const Eigen::VectorXd expect = f(lambda.cwiseProduct(x)).cwiseQuotient(lambda);
  CHECK((h(x) - expect).norm() < 1e-15);
  const Eigen::VectorXd eta(Eigen::Vector3d(0.3, 0.1, -0.4));
  const auto plain = solve_fixed_point(f, eta);
  const auto pre = solve_fixed_point(h, eta.cwiseQuotient(lambda));
  CHECK((pre.x.cwiseProduct(lambda) - plain.x).norm() < 1e-8);
}
