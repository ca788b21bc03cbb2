#include "autodiff.hpp"

#include <sstream>
#include <string>

#include "error.hpp"

namespace sdnid::ad {
namespace {

std::string shape(const Matrix& m) {
  std::ostringstream os;
  os << "(" << m.rows() << "x" << m.cols() << ")";
  return os.str();
}

[[noreturn]] void shape_error(Op op, const Matrix& a, const Matrix* b) {
  std::ostringstream os;
  os << op_name(op) << ": incompatible shapes " << shape(a);
  if (b != nullptr) os << " and " << shape(*b);
  throw Error(ErrorCode::kShapeMismatch, os.str());
}

Matrix cofactor(const Matrix& m) {
  const Eigen::Index n = m.rows();
  Matrix cof(n, n);
  if (n == 1) {
    cof(0, 0) = 1.0;
    return cof;
  }
  Matrix sub(n - 1, n - 1);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      for (Eigen::Index i = 0, si = 0; i < n; ++i) {
        if (i == r) continue;
        for (Eigen::Index j = 0, sj = 0; j < n; ++j) {
          if (j == c) continue;
          sub(si, sj++) = m(i, j);
        }
        ++si;
      }
      const double sign = ((r + c) % 2 == 0) ? 1.0 : -1.0;
      cof(r, c) = sign * sub.determinant();
    }
  }
  return cof;
}

// (-1)^(i+1) for the i-th (1-based) minor: positive means the minor has the
// wrong sign for negative definiteness.
double violation_sign(Eigen::Index i) { return (i % 2 == 1) ? 1.0 : -1.0; }

template <typename Expr>
void accumulate(Matrix& slot, const Expr& delta) {
  if (slot.size() == 0) {
    slot = delta;
  } else {
    slot += delta;
  }
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kMatMul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kScale: return "scale";
    case Op::kAddBias: return "add_bias";
    case Op::kScaleRows: return "scale_rows";
    case Op::kLeakyRelu: return "leaky_relu";
    case Op::kSquare: return "square";
    case Op::kSum: return "sum";
    case Op::kConcat: return "concat";
    case Op::kClampMin: return "clamp_min";
    case Op::kDivideInto: return "divide_into";
    case Op::kSylvesterBarrier: return "sylvester_barrier";
  }
  return "unknown";
}

std::vector<double> leading_minors(const Matrix& a) {
  if (a.rows() != a.cols()) shape_error(Op::kSylvesterBarrier, a, nullptr);
  const Matrix s = 0.5 * (a + a.transpose());
  std::vector<double> minors;
  minors.reserve(static_cast<std::size_t>(s.rows()));
  for (Eigen::Index i = 1; i <= s.rows(); ++i) {
    minors.push_back(s.topLeftCorner(i, i).determinant());
  }
  return minors;
}

const Matrix& Gradients::operator[](Var leaf) const {
  auto it = grads_.find(leaf.id);
  if (it == grads_.end()) {
    throw Error(ErrorCode::kInvalidArgument,
                "no gradient recorded for node " + std::to_string(leaf.id));
  }
  return it->second;
}

Var Tape::push(Op op, Var a, Var b, double c, Matrix value) {
  const bool needs = (a.valid() && nodes_[a.id].needs_grad) ||
                     (b.valid() && nodes_[b.id].needs_grad);
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  if (!first_non_finite_ && !all_finite(value)) first_non_finite_ = id;
  nodes_.push_back(Node{op, needs, false, a.id, b.id, c, std::move(value)});
  return Var{id};
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "reference to a node not on this tape");
  }
  return nodes_[v.id];
}

Var Tape::leaf(Matrix value, bool trainable) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  if (!first_non_finite_ && !all_finite(value)) first_non_finite_ = id;
  nodes_.push_back(Node{Op::kLeaf, trainable, trainable, Var::kInvalid,
                        Var::kInvalid, 0.0, std::move(value)});
  return Var{id};
}

Var Tape::matmul(Var a, Var b) {
  const Matrix& x = node(a).value;
  const Matrix& y = node(b).value;
  if (x.cols() != y.rows()) shape_error(Op::kMatMul, x, &y);
  Matrix out = x * y;
  return push(Op::kMatMul, a, b, 0.0, std::move(out));
}

Var Tape::add(Var a, Var b) {
  const Matrix& x = node(a).value;
  const Matrix& y = node(b).value;
  if (x.rows() != y.rows() || x.cols() != y.cols()) shape_error(Op::kAdd, x, &y);
  Matrix out = x + y;
  return push(Op::kAdd, a, b, 0.0, std::move(out));
}

Var Tape::sub(Var a, Var b) {
  const Matrix& x = node(a).value;
  const Matrix& y = node(b).value;
  if (x.rows() != y.rows() || x.cols() != y.cols()) shape_error(Op::kSub, x, &y);
  Matrix out = x - y;
  return push(Op::kSub, a, b, 0.0, std::move(out));
}

Var Tape::scale(Var a, double c) {
  Matrix out = c * node(a).value;
  return push(Op::kScale, a, Var{}, c, std::move(out));
}

Var Tape::add_bias(Var a, Var bias) {
  const Matrix& x = node(a).value;
  const Matrix& b = node(bias).value;
  if (b.cols() != 1 || b.rows() != x.rows()) shape_error(Op::kAddBias, x, &b);
  Matrix out = x.colwise() + b.col(0);
  return push(Op::kAddBias, a, bias, 0.0, std::move(out));
}

Var Tape::scale_rows(Var a, Var s) {
  const Matrix& x = node(a).value;
  const Matrix& v = node(s).value;
  Matrix out;
  if (v.rows() == 1 && v.cols() == 1) {
    out = x * v(0, 0);
  } else if (v.cols() == 1 && v.rows() == x.rows()) {
    out = x.array().colwise() * v.col(0).array();
  } else {
    shape_error(Op::kScaleRows, x, &v);
  }
  return push(Op::kScaleRows, a, s, 0.0, std::move(out));
}

Var Tape::leaky_relu(Var a, double negative_slope) {
  const Matrix& x = node(a).value;
  Matrix out = x.unaryExpr([negative_slope](double v) {
    return v > 0.0 ? v : negative_slope * v;
  });
  return push(Op::kLeakyRelu, a, Var{}, negative_slope, std::move(out));
}

Var Tape::square(Var a) {
  Matrix out = node(a).value.array().square().matrix();
  return push(Op::kSquare, a, Var{}, 0.0, std::move(out));
}

Var Tape::sum(Var a) {
  Matrix out = Matrix::Constant(1, 1, node(a).value.sum());
  return push(Op::kSum, a, Var{}, 0.0, std::move(out));
}

Var Tape::concat(Var top, Var bottom) {
  const Matrix& x = node(top).value;
  const Matrix& y = node(bottom).value;
  if (x.cols() != y.cols()) shape_error(Op::kConcat, x, &y);
  Matrix out(x.rows() + y.rows(), x.cols());
  out.topRows(x.rows()) = x;
  out.bottomRows(y.rows()) = y;
  return push(Op::kConcat, top, bottom, 0.0, std::move(out));
}

Var Tape::clamp_min(Var a, double floor) {
  Matrix out = node(a).value.array().max(floor).matrix();
  return push(Op::kClampMin, a, Var{}, floor, std::move(out));
}

Var Tape::divide_into(double c, Var a) {
  Matrix out = (c / node(a).value.array()).matrix();
  return push(Op::kDivideInto, a, Var{}, c, std::move(out));
}

Var Tape::sylvester_barrier(Var a, double weight) {
  const std::vector<double> minors = leading_minors(node(a).value);
  double penalty = 0.0;
  for (std::size_t i = 0; i < minors.size(); ++i) {
    const double v = violation_sign(static_cast<Eigen::Index>(i + 1)) * minors[i];
    if (v > 0.0) penalty += v * v;
  }
  return push(Op::kSylvesterBarrier, a, Var{}, weight,
              Matrix::Constant(1, 1, weight * penalty));
}

const Matrix& Tape::value(Var v) const { return node(v).value; }

double Tape::scalar_value(Var v) const {
  const Matrix& m = node(v).value;
  if (m.size() != 1) {
    throw Error(ErrorCode::kShapeMismatch,
                "scalar_value: node " + std::to_string(v.id) + " has shape " + shape(m));
  }
  return m(0, 0);
}

bool Tape::is_trainable(Var v) const { return node(v).trainable; }

void Tape::truncate(std::size_t mark) {
  if (mark > nodes_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "truncate past the end of the tape");
  }
  nodes_.resize(mark);
  if (first_non_finite_ && *first_non_finite_ >= mark) first_non_finite_.reset();
}

void Tape::reset() {
  nodes_.clear();
  first_non_finite_.reset();
}

std::optional<std::uint32_t> Tape::first_non_finite() const { return first_non_finite_; }

Gradients Tape::backward(Var output) const {
  const Node& out = node(output);
  if (out.value.size() != 1) {
    throw Error(ErrorCode::kShapeMismatch,
                "backward: output node " + std::to_string(output.id) +
                    " is not scalar, shape " + shape(out.value));
  }
  if (first_non_finite_ && *first_non_finite_ <= output.id) {
    throw Error(ErrorCode::kNonFinite,
                "backward: non-finite forward value at node " +
                    std::to_string(*first_non_finite_) + " (" +
                    op_name(nodes_[*first_non_finite_].op) + ")");
  }

  std::vector<Matrix> adj(output.id + 1);
  adj[output.id] = Matrix::Ones(1, 1);

  for (std::int64_t i = output.id; i >= 0; --i) {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    Matrix& g = adj[static_cast<std::size_t>(i)];
    if (g.size() == 0 || !n.needs_grad || n.op == Op::kLeaf) continue;

    const bool da = n.a != Var::kInvalid && nodes_[n.a].needs_grad;
    const bool db = n.b != Var::kInvalid && nodes_[n.b].needs_grad;

    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kMatMul: {
        const Matrix& x = nodes_[n.a].value;
        const Matrix& y = nodes_[n.b].value;
        if (da) accumulate(adj[n.a], g * y.transpose());
        if (db) accumulate(adj[n.b], x.transpose() * g);
        break;
      }
      case Op::kAdd:
        if (da) accumulate(adj[n.a], g);
        if (db) accumulate(adj[n.b], g);
        break;
      case Op::kSub:
        if (da) accumulate(adj[n.a], g);
        if (db) accumulate(adj[n.b], -g);
        break;
      case Op::kScale:
        if (da) accumulate(adj[n.a], n.c * g);
        break;
      case Op::kAddBias:
        if (da) accumulate(adj[n.a], g);
        if (db) accumulate(adj[n.b], g.rowwise().sum());
        break;
      case Op::kScaleRows: {
        const Matrix& x = nodes_[n.a].value;
        const Matrix& s = nodes_[n.b].value;
        const bool broadcast = s.size() == 1;
        if (da) {
          if (broadcast) {
            accumulate(adj[n.a], g * s(0, 0));
          } else {
            accumulate(adj[n.a], (g.array().colwise() * s.col(0).array()).matrix());
          }
        }
        if (db) {
          if (broadcast) {
            accumulate(adj[n.b], Matrix::Constant(1, 1, (g.array() * x.array()).sum()));
          } else {
            accumulate(adj[n.b], (g.array() * x.array()).rowwise().sum().matrix());
          }
        }
        break;
      }
      case Op::kLeakyRelu: {
        const Matrix& x = nodes_[n.a].value;
        const double slope = n.c;
        if (da) {
          accumulate(adj[n.a],
                     (g.array() * x.array().unaryExpr([slope](double v) {
                       return v > 0.0 ? 1.0 : slope;
                     })).matrix());
        }
        break;
      }
      case Op::kSquare:
        if (da) accumulate(adj[n.a], (2.0 * nodes_[n.a].value.array() * g.array()).matrix());
        break;
      case Op::kSum: {
        const Matrix& x = nodes_[n.a].value;
        if (da) accumulate(adj[n.a], Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
        break;
      }
      case Op::kConcat: {
        const Eigen::Index top = nodes_[n.a].value.rows();
        const Eigen::Index bottom = nodes_[n.b].value.rows();
        if (da) accumulate(adj[n.a], g.topRows(top));
        if (db) accumulate(adj[n.b], g.bottomRows(bottom));
        break;
      }
      case Op::kClampMin: {
        const Matrix& x = nodes_[n.a].value;
        const double floor = n.c;
        if (da) {
          accumulate(adj[n.a], (g.array() * x.array().unaryExpr([floor](double v) {
                                  return v > floor ? 1.0 : 0.0;
                                })).matrix());
        }
        break;
      }
      case Op::kDivideInto: {
        const Matrix& x = nodes_[n.a].value;
        if (da) accumulate(adj[n.a], (-g.array() * n.value.array() / x.array()).matrix());
        break;
      }
      case Op::kSylvesterBarrier: {
        if (!da) break;
        const Matrix& a = nodes_[n.a].value;
        const Matrix s = 0.5 * (a + a.transpose());
        Matrix gs = Matrix::Zero(s.rows(), s.cols());
        for (Eigen::Index k = 1; k <= s.rows(); ++k) {
          const Matrix sk = s.topLeftCorner(k, k);
          const double sign = violation_sign(k);
          const double v = sign * sk.determinant();
          if (v <= 0.0) continue;
          gs.topLeftCorner(k, k) += (2.0 * v * sign) * cofactor(sk);
        }
        accumulate(adj[n.a], (n.c * g(0, 0) * 0.5) * (gs + gs.transpose()));
        break;
      }
    }
    g.resize(0, 0);
  }

  Gradients result;
  for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.op != Op::kLeaf || !n.trainable) continue;
    if (i <= output.id && adj[i].size() != 0) {
      result.grads_.emplace(i, adj[i]);
    } else {
      result.grads_.emplace(i, Matrix::Zero(n.value.rows(), n.value.cols()));
    }
  }
  return result;
}

}  // namespace sdnid::ad
