#include "scout/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "scout/parallel.hpp"

namespace scout {

PrCurve pr_curve(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auprc: scores and labels differ in length");
  const auto positives = std::count_if(labels.begin(), labels.end(), [](int l) { return l != 0; });
  if (positives == 0) throw std::invalid_argument("auprc: undefined without positive labels");
  for (double s : scores)
    if (std::isnan(s)) throw std::invalid_argument("auprc: NaN score");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  PrCurve curve;
  double tp = 0.0, fp = 0.0, prev_recall = 0.0;
  const double p = static_cast<double>(positives);
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      (labels[order[i]] != 0 ? tp : fp) += 1.0;
      ++i;
    }
    const PrPoint pt{threshold, tp / (tp + fp), tp / p};
    curve.area += (pt.recall - prev_recall) * pt.precision;
    prev_recall = pt.recall;
    curve.points.push_back(pt);
  }
  return curve;
}

double auprc(std::span<const double> scores, std::span<const int> labels) { return pr_curve(scores, labels).area; }

PrCurve graph_pr_curve(const Eigen::MatrixXd& scores, const DirectedGraph& truth) {
  const int d = truth.size();
  if (scores.rows() != d || scores.cols() != d) throw std::invalid_argument("graph scores must be d x d");
  std::vector<double> s;
  std::vector<int> l;
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) {
      if (i == j) continue;
      s.push_back(scores(j, i));
      l.push_back(truth.has_edge(j, i) ? 1 : 0);
    }
  return pr_curve(s, l);
}

double graph_recovery(const Eigen::MatrixXd& scores, const DirectedGraph& truth) {
  return graph_pr_curve(scores, truth).area;
}

double target_recovery(const Eigen::MatrixXd& scores, const Eigen::MatrixXi& truth) {
  if (scores.rows() != truth.rows() || scores.cols() != truth.cols()) {
    throw std::invalid_argument("target scores must match the K x d truth");
  }
  std::vector<double> s(scores.data(), scores.data() + scores.size());
  std::vector<int> l(truth.data(), truth.data() + truth.size());
  return auprc(s, l);
}

JacobianProxy squared_jacobian_proxy(const JacobianFn& jacobian, const Eigen::MatrixXd& probes, double tau) {
  if (probes.rows() < 1) throw std::invalid_argument("jacobian proxy needs at least one probe");
  if (!probes.allFinite()) throw std::invalid_argument("jacobian proxy probes must be finite");
  const Eigen::Index d = probes.cols();
  JacobianProxy out;
  out.sensitivity = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index n = 0; n < probes.rows(); ++n) {
    const Eigen::MatrixXd j = jacobian(probes.row(n).transpose());
    out.sensitivity += j.array().square().matrix();
  }
  out.sensitivity /= static_cast<double>(probes.rows());
  out.adjacency = (out.sensitivity.transpose().array() > tau).cast<int>().matrix();
  out.adjacency.diagonal().setZero();
  return out;
}

Eigen::MatrixXd standard_normal_probes(int count, int d, Rng& rng) {
  Eigen::MatrixXd p(count, d);
  for (int n = 0; n < count; ++n)
    for (int j = 0; j < d; ++j) p(n, j) = rng.normal();
  return p;
}

double heldout_nll(const ModelState& state, const Dataset& rows, const ModelConfig& config) {
  if (rows.rows() == 0) throw std::invalid_argument("held-out NLL needs at least one row");
  if (rows.d != state.d) throw std::invalid_argument("held-out rows do not match the model dimension");
  const MaskSample masks = threshold_masks(state);
  const LogdetMode mode = state.d <= 64 ? LogdetMode::Exact : LogdetMode::Series;
  std::vector<double> values(static_cast<std::size_t>(rows.rows()));
  parallel_for(values.size(), [&](std::size_t r) {
    Rng rng = Rng(0).substream("nll", r);
    values[r] = -interventional_log_density(rows.x.row(static_cast<Eigen::Index>(r)).transpose(), rows.experiment[r],
                                            state, masks, config, mode, &rng);
  });
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

double histogram_kl(std::span<const double> p, std::span<const double> q, int bins, double eps) {
  if (p.empty() || q.empty()) throw std::invalid_argument("histogram KL needs non-empty samples");
  if (bins < 1 || !(eps > 0)) throw std::invalid_argument("histogram KL needs bins >= 1 and eps > 0");
  double lo = std::min(*std::min_element(p.begin(), p.end()), *std::min_element(q.begin(), q.end()));
  double hi = std::max(*std::max_element(p.begin(), p.end()), *std::max_element(q.begin(), q.end()));
  if (!(hi > lo)) return 0.0;
  const double width = (hi - lo) / bins;
  auto histogram = [&](std::span<const double> xs) {
    std::vector<double> h(static_cast<std::size_t>(bins), 0.0);
    for (double x : xs) {
      auto b = static_cast<long>((x - lo) / width);
      b = std::clamp(b, 0L, static_cast<long>(bins) - 1);
      h[static_cast<std::size_t>(b)] += 1.0;
    }
    double total = 0.0;
    for (double& v : h) {
      v = v / static_cast<double>(xs.size()) + eps;
      total += v;
    }
    for (double& v : h) v /= total;
    return h;
  };
  const auto hp = histogram(p);
  const auto hq = histogram(q);
  double kl = 0.0;
  for (std::size_t b = 0; b < hp.size(); ++b) kl += hp[b] * std::log(hp[b] / hq[b]);
  return kl;
}

KlSummary histogram_kl(const std::vector<Eigen::MatrixXd>& interventional, const Eigen::MatrixXd& observational,
                       int bins, double eps) {
  if (interventional.empty()) throw std::invalid_argument("histogram KL needs at least one experiment");
  const Eigen::Index d = observational.cols();
  KlSummary out;
  out.divergence.resize(static_cast<Eigen::Index>(interventional.size()), d);
  for (std::size_t k = 0; k < interventional.size(); ++k) {
    if (interventional[k].cols() != d) throw std::invalid_argument("histogram KL: dimension mismatch");
    for (Eigen::Index i = 0; i < d; ++i) {
      const Eigen::VectorXd pi = interventional[k].col(i);
      const Eigen::VectorXd qi = observational.col(i);
      out.divergence(static_cast<Eigen::Index>(k), i) =
          histogram_kl(std::span<const double>(pi.data(), static_cast<std::size_t>(pi.size())),
                       std::span<const double>(qi.data(), static_cast<std::size_t>(qi.size())), bins, eps);
    }
  }
  out.mean = out.divergence.colwise().mean().mean();
  return out;
}

std::string eval_report_to_json(const EvalReport& report) {
  nlohmann::json j;
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  j["graph_auprc"] = opt(report.graph_auprc);
  j["target_auprc"] = opt(report.target_auprc);
  j["nll"] = opt(report.nll);
  j["kl_summary"] = opt(report.kl_summary);
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : report.pr_curve.points) {
    curve.push_back({{"threshold", p.threshold}, {"precision", p.precision}, {"recall", p.recall}});
  }
  j["pr_curve"] = std::move(curve);
  return j.dump(2) + "\n";
}

}  // namespace scout
