#pragma once

// Reverse-mode automatic differentiation over dense double matrices.
//
// A Tape records every operation in execution order (define-by-run). Values
// are Eigen matrices; gradients are accumulated in reverse tape order by
// backward(). Vars are lightweight handles into a tape and are only valid
// while that tape is alive.

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfg::ad {

using Matrix = Eigen::MatrixXd;

enum class Op {
  kLeaf,
  kMatmul,
  kAdd,
  kSub,
  kMul,
  kScale,
  kShift,
  kTanh,
  kSigmoid,
  kIdentity,
  kSquare,
  kMean,
  kSum,
  kConcat,
  kMap1,
  kMap2,
};

const char* op_name(Op op);

// Raised on non-conforming operand shapes or a non-scalar loss.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Tape;

class Var {
 public:
  Var() = default;

  Tape* tape() const { return tape_; }
  std::size_t index() const { return index_; }
  bool valid() const { return tape_ != nullptr; }

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  // Only meaningful for 1x1 nodes.
  double scalar() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

using UnaryFn = std::function<double(double)>;
using BinaryFn = std::function<double(double, double)>;

// Gradients of the loss with respect to parameter leaves, keyed by the
// leaf's tape index.
using GradientMap = std::map<std::size_t, Matrix>;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = delete;
  Tape& operator=(Tape&&) = delete;

  Var constant(Matrix value);
  Var constant(double value);
  Var parameter(Matrix value);

  std::size_t size() const { return nodes_.size(); }
  const std::vector<std::size_t>& parameters() const { return parameters_; }

  const Matrix& value(std::size_t index) const { return nodes_.at(index).value; }
  Op op(std::size_t index) const { return nodes_.at(index).op; }
  const std::vector<std::size_t>& parents(std::size_t index) const {
    return nodes_.at(index).parents;
  }
  // Empty until backward() has reached the node.
  const Matrix& grad(std::size_t index) const { return nodes_.at(index).grad; }

  // Reverse sweep from a 1x1 loss node. Node gradients remain inspectable
  // through grad(); the returned map holds only parameter leaves.
  GradientMap backward(Var loss);

 private:
  friend Var matmul(Var, Var);
  friend Var add(Var, Var);
  friend Var sub(Var, Var);
  friend Var mul(Var, Var);
  friend Var scale(Var, double);
  friend Var shift(Var, double);
  friend Var tanh(Var);
  friend Var sigmoid(Var);
  friend Var identity(Var);
  friend Var square(Var);
  friend Var mean(Var);
  friend Var sum(Var);
  friend Var concat(std::span<const Var>);
  friend Var map(Var, UnaryFn, UnaryFn);
  friend Var map(Var, Var, BinaryFn, BinaryFn, BinaryFn);

  struct Node {
    Op op = Op::kLeaf;
    Matrix value;
    Matrix grad;
    std::vector<std::size_t> parents;
    double constant = 0.0;
    bool needs_grad = false;
    bool is_parameter = false;
    UnaryFn unary_derivative;
    BinaryFn binary_dx;
    BinaryFn binary_dy;
  };

  Var push(Node node);
  static Var record(Tape& tape, Op op, Matrix value, std::vector<std::size_t> parents,
                    double constant = 0.0);
  void accumulate(std::size_t index, const Matrix& contribution);
  void propagate(const Node& node);

  std::vector<Node> nodes_;
  std::vector<std::size_t> parameters_;
};

// Matrix product.
Var matmul(Var a, Var b);
// Elementwise sum. `b` may also be a column vector with a.rows() rows, in
// which case it is broadcast across the columns of `a` (bias add).
Var add(Var a, Var b);
Var sub(Var a, Var b);
// Elementwise (Hadamard) product.
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var shift(Var a, double offset);
Var tanh(Var a);
// 1 / (1 + exp(-x)) with x clamped to [-500, 500].
Var sigmoid(Var a);
Var identity(Var a);
Var square(Var a);
// Reductions over all entries to a 1x1 node.
Var mean(Var a);
Var sum(Var a);
// Vertical stacking; all parts must have the same column count.
Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
// Elementwise f(a) with derivative df.
Var map(Var a, UnaryFn f, UnaryFn df);
// Elementwise f(a, b) with partial derivatives; shapes must match.
Var map(Var a, Var b, BinaryFn f, BinaryFn df_da, BinaryFn df_db);

double sigmoid_value(double x);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_parameter = 0;
  Eigen::Index worst_entry = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double loss = 0.0;  // at theta
};

// Builds a scalar loss on a fresh tape from parameter leaves.
using GraphBuilder = std::function<Var(Tape&, std::span<const Var> params)>;

// Compares reverse-mode gradients with central differences of step h,
// entry by entry. The error of an entry is
// |analytic - numeric| / (|analytic| + |numeric| + machine epsilon).
GradCheckResult grad_check(const GraphBuilder& f, const std::vector<Matrix>& theta, double h);

}  // namespace mfg::ad
