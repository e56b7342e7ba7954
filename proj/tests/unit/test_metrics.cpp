#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "scout/metrics.hpp"

using namespace scout;

namespace {

// Average precision straight from the definition: sum over distinct
// thresholds of (recall gain) * precision at that threshold.
double brute_ap(const std::vector<double>& s, const std::vector<int>& l) {
  std::vector<double> thresholds = s;
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  double pos = 0;
  for (int v : l) pos += v;
  double prev = 0.0, area = 0.0;
  for (double t : thresholds) {
    double tp = 0, pp = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i] >= t) {
        ++pp;
        tp += l[i];
      }
    area += (tp / pos - prev) * (tp / pp);
    prev = tp / pos;
  }
  return area;
}

}  // namespace

TEST_CASE("AUPRC examples") {
  CHECK(auprc(std::vector<double>{0.9, 0.8, 0.1}, std::vector<int>{1, 1, 0}) == 1.0);
  CHECK(auprc(std::vector<double>{0.9, 0.8, 0.1}, std::vector<int>{0, 0, 1}) == doctest::Approx(1.0 / 3));
  // all tied: precision is the base rate
  CHECK(auprc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, std::vector<int>{1, 0, 0, 0}) == 0.25);
  CHECK(auprc(std::vector<double>{0.9, 0.5, 0.4, 0.1}, std::vector<int>{1, 0, 1, 0}) ==
        doctest::Approx(0.5 * 1.0 + 0.5 * 2.0 / 3));
  CHECK_THROWS(auprc(std::vector<double>{0.1}, std::vector<int>{0}));
  CHECK_THROWS(auprc(std::vector<double>{NAN, 0.1}, std::vector<int>{1, 0}));
}

TEST_CASE("AUPRC agrees with brute force on every labelling up to n = 8") {
  for (int n = 1; n <= 8; ++n) {
    std::vector<double> s(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = std::floor((i * 37 % 11) / 3.0);  // ties
    for (int code = 1; code < (1 << n); ++code) {
      std::vector<int> l(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) l[static_cast<std::size_t>(i)] = (code >> i) & 1;
      CHECK(auprc(s, l) == doctest::Approx(brute_ap(s, l)).epsilon(1e-12));
    }
  }
}

TEST_CASE("AUPRC is invariant under monotone transforms") {
  Rng rng(1);
  std::vector<double> s(50), t(50);
  std::vector<int> l(50);
  for (int i = 0; i < 50; ++i) {
    s[i] = rng.normal();
    t[i] = std::exp(3 * s[i]) + 1;
    l[i] = rng.uniform() < 0.3 ? 1 : 0;
  }
  l[0] = 1;
  CHECK(auprc(s, l) == auprc(t, l));
}

TEST_CASE("graph and target recovery read the right orientation") {
  const DirectedGraph g = DirectedGraph::from_edges(3, {{0, 1}, {1, 2}});
  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(3, 3);
  scores(0, 1) = 0.9;
  scores(1, 2) = 0.8;
  scores(2, 0) = 0.1;
  scores(0, 0) = 100.0;  // ignored
  CHECK(graph_recovery(scores, g) == 1.0);
  CHECK(graph_recovery(Eigen::MatrixXd(scores.transpose()), g) < 0.5);
  Eigen::MatrixXi t = Eigen::MatrixXi::Identity(3, 3);
  CHECK(target_recovery(Eigen::MatrixXd::Identity(3, 3), t) == 1.0);
}

TEST_CASE("Jacobian proxy on a linear map") {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(3, 3);
  j(1, 0) = 0.5;  // x0 -> x1
  j(2, 1) = 0.01;
  Rng rng(2);
  const auto p = squared_jacobian_proxy([&](const Eigen::VectorXd&) { return j; }, standard_normal_probes(10, 3, rng));
  CHECK(p.sensitivity(1, 0) == doctest::Approx(0.25));
  CHECK(p.adjacency(0, 1) == 1);
  CHECK(p.adjacency(1, 2) == 0);  // 1e-4 below tau
  CHECK(p.adjacency.sum() == 1);
}

TEST_CASE("held-out NLL of the initial one-dimensional model") {
  ModelConfig cfg;
  Rng rng(3);
  const ModelState s = ModelState::init(1, 1, cfg, rng);
  Dataset rows;
  rows.d = 1;
  rows.num_experiments = 1;
  rows.x.resize(200000, 1);
  for (Eigen::Index r = 0; r < rows.x.rows(); ++r) rows.x(r, 0) = rng.normal();
  rows.experiment.assign(200000, 0);
  // entropy of N(0, 1)
  CHECK(heldout_nll(s, rows, cfg) == doctest::Approx(0.5 * std::log(2 * std::numbers::pi * std::numbers::e)).epsilon(1e-2));
}

TEST_CASE("histogram KL") {
  Rng rng(4);
  std::vector<double> p(200000), q(200000);
  for (auto& v : p) v = rng.normal();
  for (auto& v : q) v = rng.normal() + 2.0;
  CHECK(histogram_kl(p, q) == doctest::Approx(2.0).epsilon(0.1));
  CHECK(histogram_kl(p, p) == doctest::Approx(0.0));
  std::vector<double> constant(10, 1.0);
  CHECK(histogram_kl(constant, constant) == 0.0);

  Eigen::MatrixXd obs(1000, 2), shifted(1000, 2);
  for (int r = 0; r < 1000; ++r) {
    obs(r, 0) = rng.normal();
    obs(r, 1) = rng.normal();
    shifted(r, 0) = rng.normal() + 3.0;
    shifted(r, 1) = rng.normal();
  }
  const KlSummary s = histogram_kl({obs, shifted}, obs, 20, 1e-10);
  CHECK(s.divergence(0, 0) == 0.0);
  CHECK(s.divergence(1, 0) > 1.0);
  CHECK(s.divergence(1, 1) < 0.1);
  CHECK(s.mean == doctest::Approx(s.divergence.mean()));
}

TEST_CASE("report JSON has nulls for missing values") {
  EvalReport r;
  r.graph_auprc = 0.5;
  const std::string j = eval_report_to_json(r);
  CHECK(j.find("\"graph_auprc\": 0.5") != std::string::npos);
  CHECK(j.find("\"nll\": null") != std::string::npos);
}
