#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "autodiff.hpp"
#include "error.hpp"

namespace sdnid::ad {
namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double lo = -1.0,
                     double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

// Builds a scalar from the given leaves; used for both tape and FD evaluation.
using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

void expect_gradients_match(const std::vector<Matrix>& inputs, const Builder& build,
                            double tol = 1e-6) {
  Tape tape;
  std::vector<Var> leaves;
  for (const auto& m : inputs) leaves.push_back(tape.variable(m));
  const Var out = build(tape, leaves);
  const Gradients g = tape.backward(out);

  auto eval = [&](const std::vector<Matrix>& vals) {
    Tape t;
    std::vector<Var> ls;
    for (const auto& m : vals) ls.push_back(t.variable(m));
    return t.scalar_value(build(t, ls));
  };
  const double h = 1e-6;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (Eigen::Index i = 0; i < inputs[k].size(); ++i) {
      std::vector<Matrix> plus = inputs, minus = inputs;
      plus[k].data()[i] += h;
      minus[k].data()[i] -= h;
      const double fd = (eval(plus) - eval(minus)) / (2 * h);
      const double an = g[leaves[k]].data()[i];
      EXPECT_NEAR(an, fd, tol * std::max(1.0, std::abs(fd))) << "input " << k << " entry " << i;
    }
  }
}

TEST(Tape, MatMulAddSubScaleGradients) {
  std::mt19937_64 rng(1);
  expect_gradients_match({random_matrix(3, 4, rng), random_matrix(4, 2, rng), random_matrix(3, 2, rng)},
                         [](Tape& t, const std::vector<Var>& v) {
                           Var p = t.matmul(v[0], v[1]);
                           Var s = t.sub(t.add(p, v[2]), t.scale(v[2], 0.3));
                           return t.sum(t.square(s));
                         });
}

TEST(Tape, AddBiasAndScaleRowsGradients) {
  std::mt19937_64 rng(2);
  expect_gradients_match({random_matrix(3, 5, rng), random_matrix(3, 1, rng), random_matrix(3, 1, rng),
                          random_matrix(1, 1, rng)},
                         [](Tape& t, const std::vector<Var>& v) {
                           Var a = t.add_bias(v[0], v[1]);
                           Var b = t.scale_rows(a, v[2]);
                           Var c = t.scale_rows(b, v[3]);
                           return t.sum(t.square(c));
                         });
}

TEST(Tape, LeakyReluConcatGradients) {
  std::mt19937_64 rng(3);
  expect_gradients_match({random_matrix(2, 3, rng), random_matrix(4, 3, rng)},
                         [](Tape& t, const std::vector<Var>& v) {
                           Var c = t.concat(v[0], v[1]);
                           Var r = t.leaky_relu(c, 0.01);
                           return t.sum(t.square(t.add(r, c)));
                         });
}

TEST(Tape, ClampAndDivideGradients) {
  std::mt19937_64 rng(4);
  // Entries well away from the clamp floor so the FD stays on one side.
  Matrix a = random_matrix(3, 1, rng, 0.5, 2.0);
  a(1, 0) = -0.7;
  expect_gradients_match({a}, [](Tape& t, const std::vector<Var>& v) {
    return t.sum(t.divide_into(3.0, t.clamp_min(v[0], 0.1)));
  });
}

TEST(Tape, ClampMinSubgradient) {
  Tape t;
  const Var raw = t.variable((Matrix(3, 1) << -0.5, 40.0, 1e-6).finished());
  const Var out = t.sum(t.clamp_min(raw, 1e-6));
  const Gradients g = t.backward(out);
  EXPECT_EQ(g[raw](0, 0), 0.0);
  EXPECT_EQ(g[raw](1, 0), 1.0);
  EXPECT_EQ(g[raw](2, 0), 0.0);  // at the kink the clamp is active
  EXPECT_EQ(t.value(t.clamp_min(raw, 1e-6))(0, 0), 1e-6);
}

TEST(Tape, SylvesterBarrierValues) {
  Tape t;
  const Var neg = t.constant(-Matrix::Identity(3, 3));
  EXPECT_EQ(t.scalar_value(t.sylvester_barrier(neg, 1e12)), 0.0);
  const Var pos = t.constant(Matrix::Identity(1, 1));
  EXPECT_EQ(t.scalar_value(t.sylvester_barrier(pos, 1e12)), 1e12);
  // S = [[-1, 1.5], [1.5, -1]]: det S_1 = -1 fine, det S_2 = 1 - 2.25 = -1.25 wrong sign.
  const Var indef = t.constant((Matrix(2, 2) << -1, 3, 0, -1).finished());
  EXPECT_NEAR(t.scalar_value(t.sylvester_barrier(indef, 1.0)), 1.25 * 1.25, 1e-15);
}

TEST(Tape, SylvesterBarrierGradient) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    expect_gradients_match({random_matrix(3, 3, rng)}, [](Tape& t, const std::vector<Var>& v) {
      return t.sylvester_barrier(v[0], 2.0);
    }, 1e-5);
  }
}

TEST(Tape, LeadingMinorsMatchDeterminants) {
  const Matrix a = (Matrix(3, 3) << 2, 1, 0, 3, 4, 1, 0, 5, 6).finished();
  const Matrix s = 0.5 * (a + a.transpose());
  const auto minors = leading_minors(a);
  ASSERT_EQ(minors.size(), 3u);
  EXPECT_DOUBLE_EQ(minors[0], s(0, 0));
  EXPECT_NEAR(minors[1], s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0), 1e-12);
  EXPECT_NEAR(minors[2], s.determinant(), 1e-12);
}

TEST(Tape, UnusedLeafHasZeroGradient) {
  Tape t;
  const Var a = t.variable(Matrix::Ones(2, 2));
  const Var b = t.variable(Matrix::Ones(3, 1));
  const Gradients g = t.backward(t.sum(a));
  EXPECT_EQ(g[b], Matrix::Zero(3, 1));
  EXPECT_EQ(g[a], Matrix::Ones(2, 2));
}

TEST(Tape, ConstantsReceiveNoGradient) {
  Tape t;
  const Var c = t.constant(Matrix::Ones(2, 1));
  const Var v = t.variable(Matrix::Ones(2, 1));
  const Gradients g = t.backward(t.sum(t.add(c, v)));
  EXPECT_FALSE(g.contains(c));
  EXPECT_THROW(g[c], Error);
}

TEST(Tape, BackwardRejectsNonScalarOutput) {
  Tape t;
  const Var v = t.variable(Matrix::Ones(2, 1));
  try {
    t.backward(v);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
}

TEST(Tape, NonFiniteForwardIsReportedWithNodeId) {
  Tape t;
  const Var v = t.variable(Matrix::Constant(1, 1, 0.0));
  const Var inf = t.divide_into(1.0, v);
  ASSERT_TRUE(t.first_non_finite().has_value());
  EXPECT_EQ(*t.first_non_finite(), inf.id);
  try {
    t.backward(t.sum(inf));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFinite);
    EXPECT_NE(std::string(e.what()).find(std::to_string(inf.id)), std::string::npos);
  }
}

TEST(Tape, ShapeErrorsNameTheOperation) {
  Tape t;
  const Var a = t.variable(Matrix::Ones(2, 3));
  const Var b = t.variable(Matrix::Ones(2, 3));
  try {
    t.matmul(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
    EXPECT_NE(std::string(e.what()).find("matmul"), std::string::npos);
  }
  EXPECT_THROW(t.add(a, t.variable(Matrix::Ones(3, 2))), Error);
  EXPECT_THROW(t.add_bias(a, t.variable(Matrix::Ones(3, 1))), Error);
}

TEST(Tape, TruncateDropsLaterNodes) {
  Tape t;
  const Var a = t.variable(Matrix::Ones(1, 1));
  const std::size_t mark = t.mark();
  t.divide_into(1.0, t.scale(a, 0.0));
  EXPECT_TRUE(t.first_non_finite().has_value());
  t.truncate(mark);
  EXPECT_EQ(t.size(), mark);
  EXPECT_FALSE(t.first_non_finite().has_value());
  EXPECT_EQ(t.scalar_value(a), 1.0);
}

TEST(AllFinite, DetectsInfAndNan) {
  Matrix m = Matrix::Constant(3, 3, 1e308);
  EXPECT_TRUE(all_finite(m));
  m(1, 2) = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(all_finite(m));
  m(1, 2) = std::nan("");
  EXPECT_FALSE(all_finite(m));
}

}  // namespace
}  // namespace sdnid::ad
