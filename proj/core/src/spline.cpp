#include "scout/spline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace scout {

namespace {

// Forward-mode number carrying partials w.r.t. the seven quantities that
// define one bin evaluation.
constexpr int kLocal = 7;
enum LocalSlot { kE = 0, kXk, kWk, kYk, kHk, kDk, kDk1 };

struct Dual {
  double v = 0.0;
  std::array<double, kLocal> g{};

  static Dual seed(double value, int slot) {
    Dual d;
    d.v = value;
    d.g[slot] = 1.0;
    return d;
  }
};

Dual operator+(const Dual& a, const Dual& b) {
  Dual r;
  r.v = a.v + b.v;
  for (int i = 0; i < kLocal; ++i) r.g[i] = a.g[i] + b.g[i];
  return r;
}
Dual operator-(const Dual& a, const Dual& b) {
  Dual r;
  r.v = a.v - b.v;
  for (int i = 0; i < kLocal; ++i) r.g[i] = a.g[i] - b.g[i];
  return r;
}
Dual operator*(const Dual& a, const Dual& b) {
  Dual r;
  r.v = a.v * b.v;
  for (int i = 0; i < kLocal; ++i) r.g[i] = a.g[i] * b.v + a.v * b.g[i];
  return r;
}
Dual operator/(const Dual& a, const Dual& b) {
  Dual r;
  r.v = a.v / b.v;
  const double inv = 1.0 / b.v;
  for (int i = 0; i < kLocal; ++i) r.g[i] = (a.g[i] - r.v * b.g[i]) * inv;
  return r;
}
Dual operator*(double s, const Dual& a) {
  Dual r;
  r.v = s * a.v;
  for (int i = 0; i < kLocal; ++i) r.g[i] = s * a.g[i];
  return r;
}
Dual operator-(double s, const Dual& a) {
  Dual r;
  r.v = s - a.v;
  for (int i = 0; i < kLocal; ++i) r.g[i] = -a.g[i];
  return r;
}
Dual log(const Dual& a) {
  Dual r;
  r.v = std::log(a.v);
  for (int i = 0; i < kLocal; ++i) r.g[i] = a.g[i] / a.v;
  return r;
}
using std::log;

// Rational-quadratic bin map and its log-derivative.
template <typename T>
void rq_bin(const T& e, const T& xk, const T& wk, const T& yk, const T& hk, const T& dk, const T& dk1, T& z,
            T& log_deriv) {
  const T s = hk / wk;
  const T xi = (e - xk) / wk;
  const T om = xi * (1.0 - xi);
  const T denom = s + (dk1 + dk - 2.0 * s) * om;
  z = yk + hk * (s * xi * xi + dk * om) / denom;
  const T one_minus = 1.0 - xi;
  const T num = s * s * (dk1 * xi * xi + 2.0 * s * om + dk * one_minus * one_minus);
  log_deriv = log(num) - 2.0 * log(denom);
}

int find_bin(const std::vector<double>& knots, double v) {
  // knots[0] <= v < knots.back(); returns k with knots[k] <= v < knots[k+1].
  auto it = std::upper_bound(knots.begin(), knots.end(), v);
  int k = static_cast<int>(it - knots.begin()) - 1;
  return std::clamp(k, 0, static_cast<int>(knots.size()) - 2);
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

std::vector<double> floored_softmax(const Eigen::Ref<const Eigen::RowVectorXd>& logits, double min_frac) {
  const double m = logits.maxCoeff();
  const Eigen::ArrayXd e = (logits.array() - m).exp().transpose();
  const Eigen::ArrayXd p = e / e.sum();
  const double k = static_cast<double>(logits.size());
  std::vector<double> out(static_cast<std::size_t>(logits.size()));
  for (Eigen::Index i = 0; i < logits.size(); ++i) out[static_cast<std::size_t>(i)] = min_frac + (1.0 - min_frac * k) * p[i];
  return out;
}

std::vector<double> knots_from_fractions(const std::vector<double>& frac, double bound) {
  std::vector<double> knots(frac.size() + 1);
  knots[0] = -bound;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < frac.size(); ++i) {
    acc += frac[i];
    knots[i + 1] = -bound + 2.0 * bound * acc;
  }
  knots.back() = bound;
  return knots;
}

void validate(const SplineConfig& c) {
  if (c.bins < 1 || c.bound <= 0 || c.min_bin <= 0 || c.min_bin * c.bins >= 1.0 || c.min_derivative <= 0) {
    throw std::invalid_argument("spline: invalid configuration");
  }
}

}  // namespace

SplineKnots spline_knots(const Eigen::Ref<const Eigen::RowVectorXd>& raw, const SplineConfig& config) {
  validate(config);
  const int k = config.bins;
  if (raw.size() != config.param_count()) throw std::invalid_argument("spline: wrong parameter count");
  SplineKnots knots;
  knots.x = knots_from_fractions(floored_softmax(raw.segment(0, k), config.min_bin), config.bound);
  knots.y = knots_from_fractions(floored_softmax(raw.segment(k, k), config.min_bin), config.bound);
  knots.deriv.assign(static_cast<std::size_t>(k + 1), 1.0);
  for (int i = 0; i < k - 1; ++i) knots.deriv[static_cast<std::size_t>(i + 1)] = config.min_derivative + softplus(raw[2 * k + i]);
  return knots;
}

SplineValue spline_forward(double e, const SplineKnots& knots) {
  const double lo = knots.x.front();
  const double hi = knots.x.back();
  if (e < lo || e >= hi) return {e, 0.0};
  const int k = find_bin(knots.x, e);
  const auto u = static_cast<std::size_t>(k);
  SplineValue out;
  rq_bin(e, knots.x[u], knots.x[u + 1] - knots.x[u], knots.y[u], knots.y[u + 1] - knots.y[u], knots.deriv[u],
         knots.deriv[u + 1], out.z, out.log_deriv);
  return out;
}

double spline_inverse(double z, const SplineKnots& knots) {
  const double lo = knots.y.front();
  const double hi = knots.y.back();
  if (z < lo || z >= hi) return z;
  const auto u = static_cast<std::size_t>(find_bin(knots.y, z));
  const double xk = knots.x[u], wk = knots.x[u + 1] - xk;
  const double yk = knots.y[u], hk = knots.y[u + 1] - yk;
  const double dk = knots.deriv[u], dk1 = knots.deriv[u + 1];
  const double s = hk / wk;
  const double dz = z - yk;
  const double a = hk * (s - dk) + dz * (dk1 + dk - 2.0 * s);
  const double b = hk * dk - dz * (dk1 + dk - 2.0 * s);
  const double c = -s * dz;
  const double disc = std::max(0.0, b * b - 4.0 * a * c);
  const double xi = (2.0 * c) / (-b - std::sqrt(disc));
  return xk + xi * wk;
}

Eigen::RowVectorXd identity_spline_params(const SplineConfig& config) {
  validate(config);
  Eigen::RowVectorXd p = Eigen::RowVectorXd::Zero(config.param_count());
  const double raw_deriv = std::log(std::expm1(1.0 - config.min_derivative));
  p.tail(config.bins - 1).setConstant(raw_deriv);
  return p;
}

Eigen::MatrixXd identity_spline_params(int d, const SplineConfig& config) {
  return identity_spline_params(config).replicate(d, 1);
}

namespace {

// Fused spline primitive: e (B x d), width and height fractions (d x K),
// knot derivatives (d x K+1) -> B x 2d, [z | log_deriv].
ad::Var rq_spline_rows(ad::Var e, ad::Var wfrac, ad::Var hfrac, ad::Var deriv, double bound) {
  ad::Tape& tape = *e.tape();
  const Eigen::Index batch = e.rows();
  const Eigen::Index d = e.cols();
  const Eigen::Index bins = wfrac.cols();

  auto knots_for = [bound](const ad::Matrix& frac, Eigen::Index j) {
    std::vector<double> f(static_cast<std::size_t>(frac.cols()));
    for (Eigen::Index i = 0; i < frac.cols(); ++i) f[static_cast<std::size_t>(i)] = frac(j, i);
    return knots_from_fractions(f, bound);
  };

  ad::Matrix out(batch, 2 * d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto xs = knots_for(wfrac.value(), j);
    const auto ys = knots_for(hfrac.value(), j);
    for (Eigen::Index b = 0; b < batch; ++b) {
      const double v = e.value()(b, j);
      if (v < -bound || v >= bound) {
        out(b, j) = v;
        out(b, d + j) = 0.0;
        continue;
      }
      const auto k = static_cast<std::size_t>(find_bin(xs, v));
      double z, ld;
      rq_bin(v, xs[k], xs[k + 1] - xs[k], ys[k], ys[k + 1] - ys[k], deriv.value()(j, static_cast<Eigen::Index>(k)),
             deriv.value()(j, static_cast<Eigen::Index>(k) + 1), z, ld);
      out(b, j) = z;
      out(b, d + j) = ld;
    }
  }

  return tape.record(
      "rq_spline", std::move(out), {e, wfrac, hfrac, deriv},
      [e, wfrac, hfrac, deriv, bound, batch, d, bins, knots_for](ad::Tape& tp, int self) {
        const ad::Matrix& g = tp.grad(self);
        const ad::Matrix& ev = tp.value(e.id());
        const ad::Matrix& dv = tp.value(deriv.id());
        ad::Matrix ge = ad::Matrix::Zero(batch, d);
        ad::Matrix gw = ad::Matrix::Zero(d, bins);
        ad::Matrix gh = ad::Matrix::Zero(d, bins);
        ad::Matrix gd = ad::Matrix::Zero(d, bins + 1);
        std::vector<double> gx_knot(static_cast<std::size_t>(bins)), gy_knot(static_cast<std::size_t>(bins));
        for (Eigen::Index j = 0; j < d; ++j) {
          const auto xs = knots_for(tp.value(wfrac.id()), j);
          const auto ys = knots_for(tp.value(hfrac.id()), j);
          std::fill(gx_knot.begin(), gx_knot.end(), 0.0);
          std::fill(gy_knot.begin(), gy_knot.end(), 0.0);
          for (Eigen::Index b = 0; b < batch; ++b) {
            const double v = ev(b, j);
            const double gz = g(b, j);
            const double gl = g(b, d + j);
            if (v < -bound || v >= bound) {
              ge(b, j) += gz;
              continue;
            }
            const auto k = static_cast<std::size_t>(find_bin(xs, v));
            const auto kk = static_cast<Eigen::Index>(k);
            Dual z, ld;
            rq_bin(Dual::seed(v, kE), Dual::seed(xs[k], kXk), Dual::seed(xs[k + 1] - xs[k], kWk), Dual::seed(ys[k], kYk),
                   Dual::seed(ys[k + 1] - ys[k], kHk), Dual::seed(dv(j, kk), kDk), Dual::seed(dv(j, kk + 1), kDk1), z,
                   ld);
            std::array<double, kLocal> local{};
            for (int s = 0; s < kLocal; ++s) local[s] = gz * z.g[s] + gl * ld.g[s];
            ge(b, j) += local[kE];
            gx_knot[k] += local[kXk];
            gw(j, kk) += 2.0 * bound * local[kWk];
            gy_knot[k] += local[kYk];
            gh(j, kk) += 2.0 * bound * local[kHk];
            gd(j, kk) += local[kDk];
            gd(j, kk + 1) += local[kDk1];
          }
          // x_k = -B + 2B * sum_{i<k} frac_i, so frac_i collects the knot
          // gradients of every bin to its right.
          double suffix_x = 0.0, suffix_y = 0.0;
          for (Eigen::Index i = bins - 1; i >= 0; --i) {
            gw(j, i) += 2.0 * bound * suffix_x;
            gh(j, i) += 2.0 * bound * suffix_y;
            suffix_x += gx_knot[static_cast<std::size_t>(i)];
            suffix_y += gy_knot[static_cast<std::size_t>(i)];
          }
        }
        if (tp.needs_grad(e.id())) tp.grad_accum(e.id()) += ge;
        if (tp.needs_grad(wfrac.id())) tp.grad_accum(wfrac.id()) += gw;
        if (tp.needs_grad(hfrac.id())) tp.grad_accum(hfrac.id()) += gh;
        if (tp.needs_grad(deriv.id())) tp.grad_accum(deriv.id()) += gd;
      });
}

}  // namespace

SplineVars spline_forward(ad::Var e, ad::Var raw, const SplineConfig& config) {
  validate(config);
  const int k = config.bins;
  if (raw.cols() != config.param_count() || raw.rows() != e.cols()) {
    throw std::invalid_argument("spline: parameter matrix must be d x (3*bins - 1)");
  }
  ad::Tape& tape = *e.tape();
  const double floor_scale = 1.0 - config.min_bin * k;
  ad::Var wfrac = ad::affine(ad::softmax_rows(ad::slice_cols(raw, 0, k)), floor_scale, config.min_bin);
  ad::Var hfrac = ad::affine(ad::softmax_rows(ad::slice_cols(raw, k, k)), floor_scale, config.min_bin);
  ad::Var ones = tape.constant(ad::Matrix::Ones(raw.rows(), 1));
  ad::Var interior = ad::affine(ad::softplus(ad::slice_cols(raw, 2 * k, k - 1)), 1.0, config.min_derivative);
  const std::array<ad::Var, 3> parts{ones, interior, ones};
  ad::Var deriv = ad::concat_cols(parts);
  ad::Var both = rq_spline_rows(e, wfrac, hfrac, deriv, config.bound);
  const Eigen::Index d = e.cols();
  return {ad::slice_cols(both, 0, d), ad::slice_cols(both, d, d)};
}

}  // namespace scout
