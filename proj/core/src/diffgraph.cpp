#include "mfg/diffgraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mfg::ad {

namespace {

std::string shape(const Matrix& m) {
  std::ostringstream out;
  out << m.rows() << "x" << m.cols();
  return out.str();
}

[[noreturn]] void mismatch(Op op, const Matrix& a, const Matrix& b) {
  throw DimensionError(std::string(op_name(op)) + ": operands " + shape(a) + " and " + shape(b) +
                       " do not conform");
}

Tape& same_tape(Var a, Var b) {
  if (!a.valid() || a.tape() != b.tape()) {
    throw std::logic_error("operands belong to different tapes");
  }
  return *a.tape();
}

Tape& tape_of(Var a) {
  if (!a.valid()) throw std::logic_error("operation on an unbound Var");
  return *a.tape();
}

bool is_bias_broadcast(const Matrix& a, const Matrix& b) {
  return b.cols() == 1 && a.cols() != 1 && b.rows() == a.rows();
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kMatmul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kScale: return "scale";
    case Op::kShift: return "shift";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kIdentity: return "identity";
    case Op::kSquare: return "square";
    case Op::kMean: return "mean";
    case Op::kSum: return "sum";
    case Op::kConcat: return "concat";
    case Op::kMap1: return "map1";
    case Op::kMap2: return "map2";
  }
  return "unknown";
}

double sigmoid_value(double x) {
  x = std::clamp(x, -500.0, 500.0);
  return 1.0 / (1.0 + std::exp(-x));
}

const Matrix& Var::value() const { return tape_->value(index_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw DimensionError("scalar(): node is " + shape(v));
  return v(0, 0);
}

Var Tape::constant(Matrix value) {
  Node node;
  node.value = std::move(value);
  return push(std::move(node));
}

Var Tape::constant(double value) { return constant(Matrix::Constant(1, 1, value)); }

Var Tape::parameter(Matrix value) {
  Node node;
  node.value = std::move(value);
  node.needs_grad = true;
  node.is_parameter = true;
  Var v = push(std::move(node));
  parameters_.push_back(v.index());
  return v;
}

Var Tape::push(Node node) {
  if (node.op != Op::kLeaf) {
    node.needs_grad = std::any_of(node.parents.begin(), node.parents.end(),
                                  [this](std::size_t p) { return nodes_[p].needs_grad; });
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(std::size_t index, const Matrix& contribution) {
  Node& node = nodes_[index];
  if (!node.needs_grad) return;
  if (node.grad.size() == 0) {
    node.grad = contribution;
  } else {
    node.grad += contribution;
  }
}

void Tape::propagate(const Node& node) {
  const Matrix& g = node.grad;
  const auto& p = node.parents;
  switch (node.op) {
    case Op::kLeaf:
      break;
    case Op::kMatmul:
      if (nodes_[p[0]].needs_grad) accumulate(p[0], g * nodes_[p[1]].value.transpose());
      if (nodes_[p[1]].needs_grad) accumulate(p[1], nodes_[p[0]].value.transpose() * g);
      break;
    case Op::kAdd:
    case Op::kSub: {
      const double sign = node.op == Op::kAdd ? 1.0 : -1.0;
      accumulate(p[0], g);
      if (nodes_[p[1]].needs_grad) {
        if (is_bias_broadcast(nodes_[p[0]].value, nodes_[p[1]].value)) {
          accumulate(p[1], sign * g.rowwise().sum());
        } else {
          accumulate(p[1], sign * g);
        }
      }
      break;
    }
    case Op::kMul:
      if (nodes_[p[0]].needs_grad) accumulate(p[0], g.cwiseProduct(nodes_[p[1]].value));
      if (nodes_[p[1]].needs_grad) accumulate(p[1], g.cwiseProduct(nodes_[p[0]].value));
      break;
    case Op::kScale:
      accumulate(p[0], node.constant * g);
      break;
    case Op::kShift:
    case Op::kIdentity:
      accumulate(p[0], g);
      break;
    case Op::kTanh:
      accumulate(p[0], g.cwiseProduct((1.0 - node.value.array().square()).matrix()));
      break;
    case Op::kSigmoid:
      accumulate(p[0],
                 g.cwiseProduct((node.value.array() * (1.0 - node.value.array())).matrix()));
      break;
    case Op::kSquare:
      accumulate(p[0], 2.0 * g.cwiseProduct(nodes_[p[0]].value));
      break;
    case Op::kMean: {
      const Matrix& in = nodes_[p[0]].value;
      accumulate(p[0], Matrix::Constant(in.rows(), in.cols(), g(0, 0) / in.size()));
      break;
    }
    case Op::kSum: {
      const Matrix& in = nodes_[p[0]].value;
      accumulate(p[0], Matrix::Constant(in.rows(), in.cols(), g(0, 0)));
      break;
    }
    case Op::kConcat: {
      Eigen::Index row = 0;
      for (std::size_t parent : p) {
        const Eigen::Index r = nodes_[parent].value.rows();
        if (nodes_[parent].needs_grad) accumulate(parent, g.middleRows(row, r));
        row += r;
      }
      break;
    }
    case Op::kMap1: {
      const Matrix& in = nodes_[p[0]].value;
      accumulate(p[0], g.cwiseProduct(in.unaryExpr(node.unary_derivative)));
      break;
    }
    case Op::kMap2: {
      const Matrix& x = nodes_[p[0]].value;
      const Matrix& y = nodes_[p[1]].value;
      if (nodes_[p[0]].needs_grad) {
        accumulate(p[0], g.cwiseProduct(x.binaryExpr(y, node.binary_dx)));
      }
      if (nodes_[p[1]].needs_grad) {
        accumulate(p[1], g.cwiseProduct(x.binaryExpr(y, node.binary_dy)));
      }
      break;
    }
  }
}

GradientMap Tape::backward(Var loss) {
  if (loss.tape() != this) throw std::logic_error("loss belongs to another tape");
  if (nodes_[loss.index()].value.size() != 1) {
    throw DimensionError("backward: loss must be 1x1, got " + shape(nodes_[loss.index()].value));
  }
  for (Node& node : nodes_) node.grad.resize(0, 0);

  GradientMap out;
  if (nodes_[loss.index()].needs_grad) {
    nodes_[loss.index()].grad = Matrix::Ones(1, 1);
    for (std::size_t i = loss.index() + 1; i-- > 0;) {
      const Node& node = nodes_[i];
      if (!node.needs_grad || node.grad.size() == 0) continue;
      propagate(node);
    }
  }
  for (std::size_t index : parameters_) {
    const Node& node = nodes_[index];
    out.emplace(index, node.grad.size() == 0 ? Matrix::Zero(node.value.rows(), node.value.cols())
                                             : node.grad);
  }
  return out;
}

Var Tape::record(Tape& tape, Op op, Matrix value, std::vector<std::size_t> parents,
                 double constant) {
  Node node;
  node.op = op;
  node.value = std::move(value);
  node.parents = std::move(parents);
  node.constant = constant;
  return tape.push(std::move(node));
}

Var matmul(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  if (x.cols() != y.rows()) mismatch(Op::kMatmul, x, y);
  return Tape::record(tape, Op::kMatmul, x * y, {a.index(), b.index()});
}

namespace {

Matrix add_values(Op op, const Matrix& x, const Matrix& y) {
  const double sign = op == Op::kAdd ? 1.0 : -1.0;
  if (x.rows() == y.rows() && x.cols() == y.cols()) return x + sign * y;
  if (!is_bias_broadcast(x, y)) mismatch(op, x, y);
  Matrix out = x;
  out.colwise() += sign * y.col(0);
  return out;
}

}  // namespace

Var add(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  return Tape::record(tape, Op::kAdd, add_values(Op::kAdd, a.value(), b.value()),
                      {a.index(), b.index()});
}

Var sub(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  return Tape::record(tape, Op::kSub, add_values(Op::kSub, a.value(), b.value()),
                      {a.index(), b.index()});
}

Var mul(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  if (x.rows() != y.rows() || x.cols() != y.cols()) mismatch(Op::kMul, x, y);
  return Tape::record(tape, Op::kMul, x.cwiseProduct(y), {a.index(), b.index()});
}

Var scale(Var a, double factor) {
  return Tape::record(tape_of(a), Op::kScale, factor * a.value(), {a.index()}, factor);
}

Var shift(Var a, double offset) {
  Matrix out = a.value().array() + offset;
  return Tape::record(tape_of(a), Op::kShift, std::move(out), {a.index()}, offset);
}

Var tanh(Var a) {
  return Tape::record(tape_of(a), Op::kTanh, a.value().array().tanh().matrix(), {a.index()});
}

Var sigmoid(Var a) {
  return Tape::record(tape_of(a), Op::kSigmoid, a.value().unaryExpr(&sigmoid_value),
                      {a.index()});
}

Var identity(Var a) { return Tape::record(tape_of(a), Op::kIdentity, a.value(), {a.index()}); }

Var square(Var a) {
  return Tape::record(tape_of(a), Op::kSquare, a.value().array().square().matrix(),
                      {a.index()});
}

Var mean(Var a) {
  if (a.value().size() == 0) throw DimensionError("mean: empty operand");
  return Tape::record(tape_of(a), Op::kMean, Matrix::Constant(1, 1, a.value().mean()),
                      {a.index()});
}

Var sum(Var a) {
  return Tape::record(tape_of(a), Op::kSum, Matrix::Constant(1, 1, a.value().sum()),
                      {a.index()});
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat: no operands");
  Tape& tape = tape_of(parts.front());
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  std::vector<std::size_t> parents;
  parents.reserve(parts.size());
  for (const Var& part : parts) {
    if (part.tape() != &tape) throw std::logic_error("operands belong to different tapes");
    if (part.cols() != cols) mismatch(Op::kConcat, parts.front().value(), part.value());
    rows += part.rows();
    parents.push_back(part.index());
  }
  Matrix out(rows, cols);
  Eigen::Index row = 0;
  for (const Var& part : parts) {
    out.middleRows(row, part.rows()) = part.value();
    row += part.rows();
  }
  return Tape::record(tape, Op::kConcat, std::move(out), std::move(parents));
}

Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var map(Var a, UnaryFn f, UnaryFn df) {
  Tape& tape = tape_of(a);
  Var out = Tape::record(tape, Op::kMap1, a.value().unaryExpr(f), {a.index()});
  tape.nodes_[out.index()].unary_derivative = std::move(df);
  return out;
}

Var map(Var a, Var b, BinaryFn f, BinaryFn df_da, BinaryFn df_db) {
  Tape& tape = same_tape(a, b);
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  if (x.rows() != y.rows() || x.cols() != y.cols()) mismatch(Op::kMap2, x, y);
  Var out = Tape::record(tape, Op::kMap2, x.binaryExpr(y, f), {a.index(), b.index()});
  tape.nodes_[out.index()].binary_dx = std::move(df_da);
  tape.nodes_[out.index()].binary_dy = std::move(df_db);
  return out;
}

GradCheckResult grad_check(const GraphBuilder& f, const std::vector<Matrix>& theta, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("grad_check: step must be positive");

  auto evaluate = [&f](const std::vector<Matrix>& params, bool with_grad, GradientMap* grads) {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(params.size());
    for (const Matrix& p : params) leaves.push_back(tape.parameter(p));
    Var loss = f(tape, leaves);
    if (with_grad) {
      GradientMap map = tape.backward(loss);
      grads->clear();
      for (std::size_t i = 0; i < leaves.size(); ++i) {
        (*grads)[i] = map.at(leaves[i].index());
      }
    }
    return loss.scalar();
  };

  GradientMap analytic;
  const double loss = evaluate(theta, true, &analytic);

  constexpr double kEps = std::numeric_limits<double>::epsilon();
  GradCheckResult result;
  result.loss = loss;
  std::vector<Matrix> probe = theta;
  for (std::size_t p = 0; p < theta.size(); ++p) {
    for (Eigen::Index e = 0; e < theta[p].size(); ++e) {
      const double base = theta[p](e);
      probe[p](e) = base + h;
      const double plus = evaluate(probe, false, nullptr);
      probe[p](e) = base - h;
      const double minus = evaluate(probe, false, nullptr);
      probe[p](e) = base;

      const double numeric = (plus - minus) / (2.0 * h);
      const double exact = analytic.at(p)(e);
      const double err = std::abs(exact - numeric) / (std::abs(exact) + std::abs(numeric) + kEps);
      if (err > result.max_relative_error) {
        result = {err, p, e, exact, numeric, loss};
      }
    }
  }
  return result;
}

}  // namespace mfg::ad
