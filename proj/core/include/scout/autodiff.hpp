#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace scout::ad {

using Matrix = Eigen::MatrixXd;

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid as long as the tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Matrix& value() const;
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Records dense 2-D operations in execution order and replays their
/// vector-Jacobian products in exact reverse order.
///
/// Every node holds its forward value; gradients are accumulated lazily on
/// backward(). Forward values are checked for NaN/Inf as they are recorded.
class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var variable(Matrix value);
  Var constant(double value);

  /// Seeds d(out)/d(out) = 1 for a 1x1 output and accumulates gradients into
  /// every node that depends on a variable. Gradients from an earlier call
  /// are cleared first, so repeated calls give identical results.
  void backward(Var out);

  const Matrix& value(int id) const { return nodes_[id].value; }
  const Matrix& grad(int id) const;
  Matrix& grad_accum(int id);
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }

  std::size_t size() const { return nodes_.size(); }
  const std::string& op_name(int id) const { return nodes_[id].op; }

  /// Appends a node. `parents` decide whether it needs a gradient; `backward`
  /// is only kept when it does.
  Var record(std::string op, Matrix value, std::initializer_list<Var> parents, Backward backward);
  Var record(std::string op, Matrix value, std::span<const Var> parents, Backward backward);

 private:
  struct Node {
    std::string op;
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    bool is_variable = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
  Matrix empty_;
};

// Binary elementwise ops broadcast the second operand when it is 1x1, 1xC
// (repeated over rows) or Rx1 (repeated over columns). The first operand sets
// the output shape unless it is the one that broadcasts.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);

Var matmul(Var a, Var b);
Var transpose(Var a);
/// scale * a + shift.
Var affine(Var a, double scale, double shift = 0.0);
Var neg(Var a);
/// Hadamard product with a constant matrix (e.g. a binary mask).
Var mask(Var a, const Matrix& m);

Var tanh(Var a);
Var sigmoid(Var a);
Var softplus(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
Var softmax_rows(Var a);

Var sum(Var a);
Var mean(Var a);
Var row_sum(Var a);  // R x C -> R x 1

/// out.row(r) = a.row(index[r]); gradients scatter-add back.
Var gather_rows(Var a, std::span<const int> index);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);

/// Forward value is `hard`; the backward pass hands the upstream gradient to
/// `soft` unchanged.
Var straight_through(Var soft, const Matrix& hard);

/// For each row b of `scale` (B x d) builds the d x d matrix
/// J_b(i, j) = scale(b, i) * w(j, i), stored row-major in row b of a B x d^2 result.
Var scaled_transpose_rows(Var scale, Var w);

/// Each row of `a` (B x d^2, row-major d x d blocks) -> log|det| of that block.
/// Adjoint: the inverse transpose times the upstream gradient.
/// Throws NumericalError when |det| < 1e-300.
Var logdet_rows(Var a, int d);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator-(Var a) { return neg(a); }

}  // namespace scout::ad
