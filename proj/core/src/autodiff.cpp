#include "scout/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include "scout/errors.hpp"

namespace scout::ad {

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw std::invalid_argument("Var::scalar on a non-scalar");
  return v(0, 0);
}

Var Tape::constant(Matrix value) { return record("constant", std::move(value), {}, nullptr); }

Var Tape::constant(double value) { return constant(Matrix::Constant(1, 1, value)); }

Var Tape::variable(Matrix value) {
  Var v = record("variable", std::move(value), {}, nullptr);
  nodes_[v.id()].needs_grad = true;
  nodes_[v.id()].is_variable = true;
  return v;
}

Var Tape::record(std::string op, Matrix value, std::initializer_list<Var> parents, Backward backward) {
  return record(std::move(op), std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                std::move(backward));
}

Var Tape::record(std::string op, Matrix value, std::span<const Var> parents, Backward backward) {
  if (!value.allFinite()) {
    throw NumericalError("non-finite value produced by '" + op + "' (node " + std::to_string(nodes_.size()) + ")");
  }
  Node node;
  node.op = std::move(op);
  node.value = std::move(value);
  for (const Var& p : parents) {
    if (p.tape() != this) throw std::invalid_argument("autodiff: operands recorded on different tapes");
    node.needs_grad = node.needs_grad || nodes_[p.id()].needs_grad;
  }
  if (node.needs_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

const Matrix& Tape::grad(int id) const {
  const Node& n = nodes_[id];
  return n.grad.size() == 0 ? empty_ : n.grad;
}

Matrix& Tape::grad_accum(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var out) {
  const Matrix& v = value(out.id());
  if (v.rows() != 1 || v.cols() != 1) throw std::invalid_argument("backward: output must be 1x1");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  grad_accum(out.id())(0, 0) = 1.0;
  for (int id = out.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || !n.backward || n.grad.size() == 0) continue;
    n.backward(*this, id);
  }
  // Zero-fill untouched variables so callers can always read a full gradient.
  for (auto& n : nodes_)
    if (n.is_variable && n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
}

namespace {

Tape& tape_of(Var a) {
  if (!a.valid()) throw std::invalid_argument("autodiff: invalid Var");
  return *a.tape();
}

Eigen::Index broadcast_dim(Eigen::Index a, Eigen::Index b, const char* op) {
  if (a == b) return a;
  if (a == 1) return b;
  if (b == 1) return a;
  throw std::invalid_argument(std::string("autodiff: shape mismatch in ") + op);
}

Matrix expand(const Matrix& m, Eigen::Index rows, Eigen::Index cols) {
  if (m.rows() == rows && m.cols() == cols) return m;
  return m.replicate(rows / m.rows(), cols / m.cols());
}

// Sums a full-shape gradient back down to a broadcast operand's shape.
Matrix reduce_to(const Matrix& g, Eigen::Index rows, Eigen::Index cols) {
  if (g.rows() == rows && g.cols() == cols) return g;
  if (rows == 1 && cols == 1) return Matrix::Constant(1, 1, g.sum());
  if (rows == 1) return g.colwise().sum();
  return g.rowwise().sum();
}

void accumulate(Tape& t, Var target, const Matrix& g) {
  if (!t.needs_grad(target.id())) return;
  const Matrix& v = t.value(target.id());
  t.grad_accum(target.id()) += reduce_to(g, v.rows(), v.cols());
}

template <typename Fwd, typename Dfn>
Var unary(const char* name, Var a, Fwd fwd, Dfn dfn) {
  Tape& t = tape_of(a);
  Matrix out = fwd(a.value());
  return t.record(name, std::move(out), {a}, [a, dfn](Tape& tp, int self) {
    accumulate(tp, a, dfn(tp.value(a.id()), tp.value(self), tp.grad(self)));
  });
}

}  // namespace

Var add(Var a, Var b) {
  Tape& t = tape_of(a);
  const auto r = broadcast_dim(a.rows(), b.rows(), "add");
  const auto c = broadcast_dim(a.cols(), b.cols(), "add");
  Matrix out = expand(a.value(), r, c) + expand(b.value(), r, c);
  return t.record("add", std::move(out), {a, b}, [a, b](Tape& tp, int self) {
    accumulate(tp, a, tp.grad(self));
    accumulate(tp, b, tp.grad(self));
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a);
  const auto r = broadcast_dim(a.rows(), b.rows(), "sub");
  const auto c = broadcast_dim(a.cols(), b.cols(), "sub");
  Matrix out = expand(a.value(), r, c) - expand(b.value(), r, c);
  return t.record("sub", std::move(out), {a, b}, [a, b](Tape& tp, int self) {
    accumulate(tp, a, tp.grad(self));
    accumulate(tp, b, -tp.grad(self));
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a);
  const auto r = broadcast_dim(a.rows(), b.rows(), "mul");
  const auto c = broadcast_dim(a.cols(), b.cols(), "mul");
  Matrix out = expand(a.value(), r, c).cwiseProduct(expand(b.value(), r, c));
  return t.record("mul", std::move(out), {a, b}, [a, b, r, c](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.needs_grad(a.id())) accumulate(tp, a, g.cwiseProduct(expand(tp.value(b.id()), r, c)));
    if (tp.needs_grad(b.id())) accumulate(tp, b, g.cwiseProduct(expand(tp.value(a.id()), r, c)));
  });
}

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a);
  if (a.cols() != b.rows()) throw std::invalid_argument("autodiff: shape mismatch in matmul");
  Matrix out = a.value() * b.value();
  return t.record("matmul", std::move(out), {a, b}, [a, b](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.needs_grad(a.id())) tp.grad_accum(a.id()).noalias() += g * tp.value(b.id()).transpose();
    if (tp.needs_grad(b.id())) tp.grad_accum(b.id()).noalias() += tp.value(a.id()).transpose() * g;
  });
}

Var transpose(Var a) {
  return unary(
      "transpose", a, [](const Matrix& x) -> Matrix { return x.transpose(); },
      [](const Matrix&, const Matrix&, const Matrix& g) -> Matrix { return g.transpose(); });
}

Var affine(Var a, double scale, double shift) {
  return unary(
      "affine", a, [=](const Matrix& x) -> Matrix { return (scale * x.array() + shift).matrix(); },
      [=](const Matrix&, const Matrix&, const Matrix& g) -> Matrix { return scale * g; });
}

Var neg(Var a) { return affine(a, -1.0, 0.0); }

Var mask(Var a, const Matrix& m) {
  if (m.rows() != a.rows() || m.cols() != a.cols()) throw std::invalid_argument("autodiff: shape mismatch in mask");
  return unary(
      "mask", a, [&m](const Matrix& x) -> Matrix { return x.cwiseProduct(m); },
      [m](const Matrix&, const Matrix&, const Matrix& g) -> Matrix { return g.cwiseProduct(m); });
}

Var tanh(Var a) {
  return unary(
      "tanh", a, [](const Matrix& x) -> Matrix { return x.array().tanh().matrix(); },
      [](const Matrix&, const Matrix& y, const Matrix& g) -> Matrix {
        return (g.array() * (1.0 - y.array().square())).matrix();
      });
}

namespace {

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

Var sigmoid(Var a) {
  return unary(
      "sigmoid", a, [](const Matrix& x) -> Matrix { return x.unaryExpr(&stable_sigmoid); },
      [](const Matrix&, const Matrix& y, const Matrix& g) -> Matrix {
        return (g.array() * y.array() * (1.0 - y.array())).matrix();
      });
}

Var softplus(Var a) {
  return unary(
      "softplus", a, [](const Matrix& x) -> Matrix { return x.unaryExpr(&stable_softplus); },
      [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
        return g.cwiseProduct(x.unaryExpr(&stable_sigmoid));
      });
}

Var exp(Var a) {
  return unary(
      "exp", a, [](const Matrix& x) -> Matrix { return x.array().exp().matrix(); },
      [](const Matrix&, const Matrix& y, const Matrix& g) -> Matrix { return g.cwiseProduct(y); });
}

Var log(Var a) {
  if ((a.value().array() <= 0.0).any()) throw NumericalError("log of a non-positive value");
  return unary(
      "log", a, [](const Matrix& x) -> Matrix { return x.array().log().matrix(); },
      [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix { return g.cwiseQuotient(x); });
}

Var square(Var a) {
  return unary(
      "square", a, [](const Matrix& x) -> Matrix { return x.array().square().matrix(); },
      [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix { return 2.0 * g.cwiseProduct(x); });
}

Var softmax_rows(Var a) {
  return unary(
      "softmax_rows", a,
      [](const Matrix& x) -> Matrix {
        Matrix y = x;
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
          const double m = x.row(r).maxCoeff();
          y.row(r) = (x.row(r).array() - m).exp().matrix();
          y.row(r) /= y.row(r).sum();
        }
        return y;
      },
      [](const Matrix&, const Matrix& y, const Matrix& g) -> Matrix {
        // dx = y * (g - <g, y>) row by row
        Matrix dx(y.rows(), y.cols());
        for (Eigen::Index r = 0; r < y.rows(); ++r) {
          const double dot = g.row(r).dot(y.row(r));
          dx.row(r) = (y.row(r).array() * (g.row(r).array() - dot)).matrix();
        }
        return dx;
      });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  return t.record("sum", Matrix::Constant(1, 1, a.value().sum()), {a}, [a](Tape& tp, int self) {
    const double g = tp.grad(self)(0, 0);
    tp.grad_accum(a.id()).array() += g;
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  return affine(sum(a), 1.0 / n);
}

Var row_sum(Var a) {
  Tape& t = tape_of(a);
  Matrix out = a.value().rowwise().sum();
  return t.record("row_sum", std::move(out), {a}, [a](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    tp.grad_accum(a.id()).colwise() += g.col(0);
  });
}

Var gather_rows(Var a, std::span<const int> index) {
  Tape& t = tape_of(a);
  const Matrix& src = a.value();
  Matrix out(static_cast<Eigen::Index>(index.size()), src.cols());
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] < 0 || index[r] >= src.rows()) throw std::out_of_range("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(r)) = src.row(index[r]);
  }
  std::vector<int> idx(index.begin(), index.end());
  return t.record("gather_rows", std::move(out), {a}, [a, idx = std::move(idx)](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    Matrix& ga = tp.grad_accum(a.id());
    for (std::size_t r = 0; r < idx.size(); ++r) ga.row(idx[r]) += g.row(static_cast<Eigen::Index>(r));
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no operands");
  Tape& t = tape_of(parts.front());
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("autodiff: shape mismatch in concat_cols");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index offset = 0;
  for (const Var& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return t.record("concat_cols", std::move(out), parts, [ps](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    Eigen::Index off = 0;
    for (const Var& p : ps) {
      const Eigen::Index c = tp.value(p.id()).cols();
      if (tp.needs_grad(p.id())) tp.grad_accum(p.id()) += g.middleCols(off, c);
      off += c;
    }
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw std::out_of_range("slice_cols: range out of bounds");
  Tape& t = tape_of(a);
  Matrix out = a.value().middleCols(start, count);
  return t.record("slice_cols", std::move(out), {a}, [a, start, count](Tape& tp, int self) {
    tp.grad_accum(a.id()).middleCols(start, count) += tp.grad(self);
  });
}

Var straight_through(Var soft, const Matrix& hard) {
  if (hard.rows() != soft.rows() || hard.cols() != soft.cols()) {
    throw std::invalid_argument("straight_through: shape mismatch");
  }
  Tape& t = tape_of(soft);
  return t.record("straight_through", hard, {soft}, [soft](Tape& tp, int self) {
    tp.grad_accum(soft.id()) += tp.grad(self);
  });
}

Var scaled_transpose_rows(Var scale, Var w) {
  Tape& t = tape_of(scale);
  const Eigen::Index d = w.rows();
  if (w.cols() != d || scale.cols() != d) throw std::invalid_argument("scaled_transpose_rows: shape mismatch");
  const Matrix& s = scale.value();
  const Matrix& wv = w.value();
  Matrix out(s.rows(), d * d);
  for (Eigen::Index b = 0; b < s.rows(); ++b)
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) out(b, i * d + j) = s(b, i) * wv(j, i);
  return t.record("scaled_transpose_rows", std::move(out), {scale, w}, [scale, w, d](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    const Matrix& sv = tp.value(scale.id());
    const Matrix& wv2 = tp.value(w.id());
    const bool gs = tp.needs_grad(scale.id());
    const bool gw = tp.needs_grad(w.id());
    Matrix ds = Matrix::Zero(sv.rows(), d);
    Matrix dw = Matrix::Zero(d, d);
    for (Eigen::Index b = 0; b < sv.rows(); ++b)
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
          const double gij = g(b, i * d + j);
          ds(b, i) += gij * wv2(j, i);
          dw(j, i) += gij * sv(b, i);
        }
    if (gs) tp.grad_accum(scale.id()) += ds;
    if (gw) tp.grad_accum(w.id()) += dw;
  });
}

Var logdet_rows(Var a, int d) {
  Tape& t = tape_of(a);
  if (a.cols() != static_cast<Eigen::Index>(d) * d) throw std::invalid_argument("logdet_rows: expected B x d^2 input");
  const Matrix& v = a.value();
  const Eigen::Index batch = v.rows();
  Matrix out(batch, 1);
  Matrix inv_t(batch, d * d);  // row-major blocks of inverse transposes
  for (Eigen::Index b = 0; b < batch; ++b) {
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = v(b, i * d + j);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
    const Eigen::MatrixXd& packed = lu.matrixLU();
    double logabs = 0.0;
    for (int i = 0; i < d; ++i) {
      const double u = std::abs(packed(i, i));
      if (!(u > 0.0)) throw NumericalError("logdet_rows: singular matrix");
      logabs += std::log(u);
    }
    if (logabs < std::log(1e-300)) throw NumericalError("logdet_rows: |det| below 1e-300");
    out(b, 0) = logabs;
    const Eigen::MatrixXd it = lu.inverse().transpose();
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) inv_t(b, i * d + j) = it(i, j);
  }
  return t.record("logdet_rows", std::move(out), {a}, [a, inv_t = std::move(inv_t)](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    tp.grad_accum(a.id()) += (inv_t.array().colwise() * g.col(0).array()).matrix();
  });
}

}  // namespace scout::ad
