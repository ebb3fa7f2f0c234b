#include <gtest/gtest.h>

#include <random>

#include "random_inputs.hpp"
#include "skosens/error.hpp"
#include "skosens/skorohod.hpp"

namespace skosens {
namespace {

GridPath linear_path(const Eigen::VectorXd& from, const Eigen::VectorXd& to, std::size_t K) {
  const double dt = 1.0 / static_cast<double>(K);
  return GridPath::sample(0.0, dt, K, from.size(), 1,
                          [&](double t) -> Eigen::MatrixXd { return from + t * (to - from); });
}

void expect_invariants(const ReflectionSolution& s, const ReflectionSpec& spec,
                       const ToleranceConfig& tol = {}) {
  for (std::size_t k = 0; k < s.z.size(); ++k) {
    const auto z = s.z.vec(k);
    EXPECT_LE((z - s.x.vec(k) - spec.R() * s.y.vec(k)).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_GE(z.minCoeff(), -tol.tau_zero);
    if (k > 0) {
      const Eigen::VectorXd dy = s.y.vec(k) - s.y.vec(k - 1);
      EXPECT_GE(dy.minCoeff(), 0.0);
      for (int i = 0; i < spec.dim(); ++i) EXPECT_LE(std::min(z(i), dy(i)), tol.tau_zero);
    }
  }
}

TEST(SkorohodFixedPoint, NondecreasingInputNeedsNoPush) {
  const auto spec = validate_reflection_matrices(Eigen::MatrixXd::Zero(2, 2));
  const auto x = linear_path(Eigen::Vector2d(0.1, 0.0), Eigen::Vector2d(1.0, 2.0), 50);
  for (const auto& s : {skorohod_fixed_point(x, spec), skorohod_per_step(x, spec)}) {
    EXPECT_TRUE(s.y.vec(50).isZero(0.0));
    EXPECT_EQ(weighted_sup_distance(s.z, x, spec.weights()), 0.0);
  }
}

TEST(SkorohodFixedPoint, OneDimensionalClosedForm) {
  std::mt19937_64 rng(3);
  const auto spec = validate_reflection_matrices(Eigen::MatrixXd::Zero(1, 1));
  const auto x = testing::brownian_path(1, 2000, 1e-3, rng);
  const auto fp = skorohod_fixed_point(x, spec);
  const auto oracle = one_dim_reflection_oracle(x);
  double running = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    running = std::max(running, -x.vec(k)(0));
    EXPECT_EQ(oracle.y.vec(k)(0), running);
  }
  EXPECT_LE(weighted_sup_distance(fp.y, oracle.y, spec.weights()), 1e-12);
  // J = 1 per-step is an exact running max, so the match is bitwise.
  const auto ps = skorohod_per_step(x, spec);
  EXPECT_LE(weighted_sup_distance(ps.z, oracle.z, spec.weights()), 1e-14);
}

TEST(SkorohodFixedPoint, CrossMethodLinearPath) {
  Eigen::MatrixXd P(2, 2);
  P << 0, 0.5, 0.5, 0;
  const auto spec = validate_reflection_matrices(P);
  const auto x = linear_path(Eigen::Vector2d(1, 1), Eigen::Vector2d(-1, 1), 999);
  const auto fp = skorohod_fixed_point(x, spec);
  const auto ps = skorohod_per_step(x, spec);
  EXPECT_LE(weighted_sup_distance(fp.z, ps.z, spec.weights()), 1e-10);
  EXPECT_LE(weighted_sup_distance(fp.y, ps.y, spec.weights()), 1e-10);
  expect_invariants(fp, spec);
  // after crossing zero coordinate 1 is held at 0 and, through R = E - P, drags coordinate 2 down
  EXPECT_NEAR(fp.z.vec(999)(0), 0.0, 1e-10);
  EXPECT_NEAR(fp.y.vec(999)(0), 1.0, 1e-10);
  EXPECT_NEAR(fp.z.vec(999)(1), 0.5, 1e-10);
  EXPECT_NEAR(ps.z.vec(999)(1), 0.5, 1e-14);
}

TEST(StepComplementarity, Examples) {
  const auto spec1 = validate_reflection_matrices(Eigen::MatrixXd::Zero(1, 1));
  double v = -0.3, dy = -1.0;
  solve_step_complementarity(spec1, {&v, 1}, {&dy, 1}, {});
  EXPECT_DOUBLE_EQ(dy, 0.3);
  v = 0.4;
  solve_step_complementarity(spec1, {&v, 1}, {&dy, 1}, {});
  EXPECT_EQ(dy, 0.0);

  Eigen::MatrixXd P(2, 2);
  P << 0, 0.5, 0.5, 0;
  const auto spec = validate_reflection_matrices(P);
  // both coordinates pushed: dy = R^{-1}(-v)
  Eigen::Vector2d vv(-1.0, -0.5), d;
  solve_step_complementarity(spec, {vv.data(), 2}, {d.data(), 2}, {});
  const Eigen::Vector2d expect = spec.R().inverse() * (-vv);
  EXPECT_NEAR((d - expect).cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

TEST(SkorohodPerStep, OneStepBarrier) {
  const auto spec = validate_reflection_matrices(Eigen::MatrixXd::Zero(1, 1));
  GridPath x(0.0, 1.0, 1, 1, 2);
  x.vec(0)(0) = 0.0;
  x.vec(1)(0) = -0.3;
  const auto s = skorohod_per_step(x, spec);
  EXPECT_DOUBLE_EQ(s.y.vec(1)(0), 0.3);
  EXPECT_EQ(s.z.vec(1)(0), 0.0);
}

TEST(SkorohodPerStep, AgreesWithFixedPointOnRandomInputs) {
  std::mt19937_64 rng(2024);
  const ToleranceConfig tol;
  for (int rep = 0; rep < 1000; ++rep) {
    const int J = 1 + rep % 3;
    const auto spec = validate_reflection_matrices(testing::random_P(J, rng));
    const auto x = testing::brownian_path(J, 100, 1e-2, rng);
    const auto fp = skorohod_fixed_point(x, spec, tol);
    const auto ps = skorohod_per_step(x, spec, tol);
    ASSERT_LE(weighted_sup_distance(fp.z, ps.z, spec.weights()), 10 * tol.tau_fp) << rep;
    ASSERT_LE(weighted_sup_distance(fp.y, ps.y, spec.weights()), 10 * tol.tau_fp) << rep;
    if (rep % 50 == 0) {
      expect_invariants(ps, spec, tol);
      expect_invariants(fp, spec, tol);
    }
  }
}

TEST(SkorohodFixedPoint, GeometricContractionAndMinimality) {
  std::mt19937_64 rng(99);
  for (int rep = 0; rep < 30; ++rep) {
    const int J = 2 + rep % 2;
    const auto spec = validate_reflection_matrices(testing::random_P(J, rng));
    const auto x = testing::brownian_path(J, 200, 5e-3, rng);
    SolverStats stats;
    const auto fp = skorohod_fixed_point(x, spec, {}, &stats);
    ASSERT_EQ(stats.increments.size(), static_cast<std::size_t>(stats.iterations));
    for (std::size_t n = 1; n < stats.increments.size(); ++n) {
      EXPECT_LE(stats.increments[n], spec.eta() * stats.increments[n - 1] + 1e-15);
    }
    // truncated iterations stay below the fixed point
    ToleranceConfig loose;
    loose.tau_fp = 1e-3;
    const auto early = skorohod_fixed_point(x, spec, loose);
    for (std::size_t k = 0; k < x.size(); ++k) {
      EXPECT_LE((early.y.vec(k) - fp.y.vec(k)).maxCoeff(), 1e-15);
    }
  }
}

TEST(SkorohodFixedPoint, IterationCap) {
  Eigen::MatrixXd P(2, 2);
  P << 0, 0.99, 0.99, 0;
  const auto spec = validate_reflection_matrices(P);
  const auto x = linear_path(Eigen::Vector2d(0, 0), Eigen::Vector2d(-1, -1), 10);
  ToleranceConfig tol;
  tol.max_iters = 3;
  try {
    skorohod_fixed_point(x, spec, tol);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoConvergence);
  }
}

TEST(SkorohodOracle, Examples) {
  const auto up = linear_path(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1), 10);
  auto s = one_dim_reflection_oracle(up);
  EXPECT_TRUE(s.y.vec(10).isZero(0.0));
  EXPECT_DOUBLE_EQ(s.z.vec(10)(0), 1.0);
  const auto down = linear_path(Eigen::VectorXd::Zero(1), -Eigen::VectorXd::Ones(1), 10);
  s = one_dim_reflection_oracle(down);
  for (std::size_t k = 0; k <= 10; ++k) {
    EXPECT_DOUBLE_EQ(s.y.vec(k)(0), -down.vec(k)(0));
    EXPECT_EQ(s.z.vec(k)(0), 0.0);
  }
  GridPath two(0.0, 1.0, 2, 1, 3);
  try {
    one_dim_reflection_oracle(two);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(SkorohodPerStep, RefinementTrend) {
  // Same continuous input sampled at dt and dt/2: the per-step output moves
  // by O(sqrt(dt)) at shared grid points and less at finer resolution.
  std::mt19937_64 rng(17);
  Eigen::MatrixXd P(2, 2);
  P << 0, 0.4, 0.3, 0;
  const auto spec = validate_reflection_matrices(P);
  const auto fine = testing::brownian_path(2, 8192, 1.0 / 8192, rng);
  auto coarsen = [&](std::size_t factor) {
    GridPath out(0.0, fine.dt() * static_cast<double>(factor), 2, 1, 0);
    for (std::size_t k = 0; k < fine.size(); k += factor) out.push_back(fine.vec(k));
    return out;
  };
  auto gap = [&](std::size_t factor) {
    const auto c = skorohod_per_step(coarsen(factor), spec);
    const auto f = skorohod_per_step(coarsen(factor / 2), spec);
    double m = 0.0;
    for (std::size_t k = 0; k < c.z.size(); ++k) {
      m = std::max(m, (c.z.vec(k) - f.z.vec(2 * k)).cwiseAbs().maxCoeff());
    }
    return m;
  };
  EXPECT_LT(gap(2), gap(64));
}

}  // namespace
}  // namespace skosens
