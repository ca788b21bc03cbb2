#pragma once

// Define-by-run reverse-mode differentiation over dense double matrices.
//
// A Tape records every primitive as it is evaluated. Values are computed
// eagerly; backward() walks the record in reverse and accumulates adjoints.
// Column-batched usage is the norm: a state batch is an (n_x x B) matrix.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace sdnid::ad {

using Matrix = Eigen::MatrixXd;

enum class Op : std::uint8_t {
  kLeaf,
  kMatMul,
  kAdd,
  kSub,
  kScale,
  kAddBias,
  kScaleRows,
  kLeakyRelu,
  kSquare,
  kSum,
  kConcat,
  kClampMin,
  kDivideInto,
  kSylvesterBarrier,
};

const char* op_name(Op op);

struct Var {
  static constexpr std::uint32_t kInvalid = std::numeric_limits<std::uint32_t>::max();
  std::uint32_t id = kInvalid;

  bool valid() const { return id != kInvalid; }
  bool operator==(const Var&) const = default;
};

class Gradients {
 public:
  // Gradient of a trainable leaf. Leaves the output does not depend on have an
  // all-zero gradient of the leaf's shape.
  const Matrix& operator[](Var leaf) const;
  bool contains(Var leaf) const { return grads_.count(leaf.id) != 0; }
  std::size_t size() const { return grads_.size(); }

 private:
  friend class Tape;
  std::unordered_map<std::uint32_t, Matrix> grads_;
};

class Tape {
 public:
  Tape() = default;

  // Leaves. Only trainable leaves receive entries in Gradients.
  Var leaf(Matrix value, bool trainable);
  Var constant(Matrix value) { return leaf(std::move(value), false); }
  Var variable(Matrix value) { return leaf(std::move(value), true); }
  Var scalar(double value) { return constant(Matrix::Constant(1, 1, value)); }

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var scale(Var a, double c);
  // a + bias, bias is (rows x 1) broadcast over columns.
  Var add_bias(Var a, Var bias);
  // out(i, j) = a(i, j) * s(i); s is (rows x 1) or (1 x 1).
  Var scale_rows(Var a, Var s);
  Var leaky_relu(Var a, double negative_slope = 0.01);
  Var square(Var a);
  Var sum(Var a);
  // Vertical stacking [top; bottom].
  Var concat(Var top, Var bottom);
  // max(floor, a), elementwise. Subgradient is 1 where a > floor, 0 otherwise.
  Var clamp_min(Var a, double floor);
  // c / a, elementwise.
  Var divide_into(double c, Var a);
  // weight * sum_i relu((-1)^(i+1) det(S_1..i))^2 with S = (a + a^T) / 2. Zero
  // when every leading principal minor of S has the sign of a negative
  // definite matrix.
  Var sylvester_barrier(Var a, double weight);

  const Matrix& value(Var v) const;
  double scalar_value(Var v) const;
  bool is_trainable(Var v) const;

  std::size_t size() const { return nodes_.size(); }
  // Drops every node recorded after `mark`. Vars created before it stay valid.
  std::size_t mark() const { return nodes_.size(); }
  void truncate(std::size_t mark);
  void reset();

  // Id of the first node whose forward value contains NaN or Inf.
  std::optional<std::uint32_t> first_non_finite() const;

  // d output / d leaf for every trainable leaf. `output` must be 1 x 1.
  Gradients backward(Var output) const;

 private:
  struct Node {
    Op op;
    bool needs_grad;
    bool trainable;
    std::uint32_t a;
    std::uint32_t b;
    double c;
    Matrix value;
  };

  Var push(Op op, Var a, Var b, double c, Matrix value);
  const Node& node(Var v) const;

  std::vector<Node> nodes_;
  std::optional<std::uint32_t> first_non_finite_;
};

// Cheaper than Eigen's allFinite(): x * 0 is NaN exactly for Inf and NaN.
inline bool all_finite(const Matrix& m) { return std::isfinite((m.array() * 0.0).sum()); }

// Leading principal minors of the symmetric part of `a`, det(S_1..i).
std::vector<double> leading_minors(const Matrix& a);

}  // namespace sdnid::ad
