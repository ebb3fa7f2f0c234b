#include <gtest/gtest.h>

#include <cmath>

#include "skosens/augmented.hpp"
#include "skosens/error.hpp"
#include "skosens/sder.hpp"

namespace skosens {
namespace {

DiffusionModel one_dim(double theta, double sigma) {
  return DiffusionModel(validate_reflection_matrices(Eigen::MatrixXd::Zero(1, 1)),
                        Eigen::VectorXd::Constant(1, theta), Eigen::MatrixXd::Constant(1, 1, sigma));
}

DiffusionModel two_dim() {
  Eigen::MatrixXd P(2, 2);
  P << 0, 0.4, 0.3, 0;
  return DiffusionModel(validate_reflection_matrices(P), Eigen::Vector2d(-1, -1),
                        Eigen::MatrixXd::Identity(2, 2));
}

SimConfig short_config(double horizon = 2.0, std::uint64_t seed = 5) {
  SimConfig c;
  c.horizon = horizon;
  c.burn_in = 0.0;
  c.stride = 0.1;
  c.seed = seed;
  return c;
}

TEST(Simulate, DeterministicInteriorFlow) {
  const auto spec = validate_reflection_matrices(Eigen::MatrixXd::Zero(2, 2));
  const DiffusionModel model(spec, Eigen::Vector2d(0.5, 1.0), Eigen::MatrixXd::Zero(2, 3));
  for (auto scheme : {ReflectionScheme::kBridge, ReflectionScheme::kProjected}) {
    auto cfg = short_config();
    cfg.scheme = scheme;
    Eigen::MatrixXd a0(2, 2);
    a0 << 0.1, 0.2, 0.3, 0.4;
    const auto out = simulate(model, Eigen::Vector2d(1, 2), a0, cfg);
    EXPECT_EQ(out.solution.z.size(), cfg.num_steps() + 1);
    EXPECT_EQ(out.noise.rows(), 3);
    for (std::size_t k = 0; k < out.solution.z.size(); ++k) {
      const double t = out.solution.z.time(k);
      EXPECT_NEAR(out.solution.z.vec(k)(0), 1 + 0.5 * t, 1e-12);
      EXPECT_NEAR(out.solution.z.vec(k)(1), 2 + 1.0 * t, 1e-12);
      EXPECT_TRUE(out.solution.y.vec(k).isZero(0.0));
      EXPECT_LE((out.solution.a.at(k) - a0 - t * Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff(),
                1e-12);
    }
    EXPECT_TRUE(out.jumps.empty());
  }
}

TEST(Simulate, Reproducible) {
  const auto model = two_dim();
  const auto cfg = short_config();
  const auto a = simulate(model, Eigen::Vector2d(0.5, 0.0), Eigen::MatrixXd::Zero(2, 2), cfg, 3);
  const auto b = simulate(model, Eigen::Vector2d(0.5, 0.0), Eigen::MatrixXd::Zero(2, 2), cfg, 3);
  const auto c = simulate(model, Eigen::Vector2d(0.5, 0.0), Eigen::MatrixXd::Zero(2, 2), cfg, 4);
  EXPECT_TRUE(std::equal(a.solution.z.data().begin(), a.solution.z.data().end(),
                         b.solution.z.data().begin()));
  EXPECT_TRUE(std::equal(a.solution.a.data().begin(), a.solution.a.data().end(),
                         b.solution.a.data().begin()));
  EXPECT_FALSE(std::equal(a.solution.z.data().begin(), a.solution.z.data().end(),
                          c.solution.z.data().begin()));
}

TEST(Simulate, InitialConditionChecks) {
  const auto model = two_dim();
  const auto cfg = short_config();
  auto code = [&](const Eigen::VectorXd& z0, const Eigen::MatrixXd& a0) {
    try {
      simulate(model, z0, a0, cfg);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  EXPECT_EQ(code(Eigen::Vector2d(-0.1, 1), Eigen::MatrixXd::Zero(2, 2)),
            ErrorCode::kInvalidInitialCondition);
  EXPECT_EQ(code(Eigen::Vector2d(0.1, 1), -Eigen::MatrixXd::Ones(2, 2)),
            ErrorCode::kInvalidInitialCondition);
  Eigen::MatrixXd a0 = Eigen::MatrixXd::Zero(2, 2);
  a0(0, 1) = 1.0;
  EXPECT_EQ(code(Eigen::Vector2d(0.0, 1), a0), ErrorCode::kInvalidInitialCondition);
  EXPECT_NO_THROW(simulate(model, Eigen::Vector2d(1.0, 0.0), a0, cfg));
  EXPECT_EQ(code(Eigen::Vector3d(1, 1, 1), Eigen::MatrixXd::Zero(2, 2)), ErrorCode::kShapeMismatch);
}

TEST(SimConfig, Validation) {
  SimConfig c;
  c.horizon = 200;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.num_steps(), 200000u);
  EXPECT_EQ(c.burn_in_steps(), 100000u);
  EXPECT_EQ(c.stride_steps(), 1000u);
  c.burn_in = 200;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.dt = 0;
  EXPECT_THROW(c.validate(), Error);
  c = short_config();
  c.stride = 1e-4;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Simulate, SolutionInvariantsBothSchemes) {
  const auto model = two_dim();
  for (auto scheme : {ReflectionScheme::kBridge, ReflectionScheme::kProjected}) {
    auto cfg = short_config(5.0);
    cfg.scheme = scheme;
    const auto out = simulate(model, Eigen::Vector2d(0.2, 0.0), Eigen::MatrixXd::Zero(2, 2), cfg, 1);
    const auto& s = out.solution;
    const auto r = check_augmented_conditions(s, model.spec());
    EXPECT_LE(r.a_identity, 1e-9);
    EXPECT_LE(r.b_decrease, 0.0);
    EXPECT_LE(r.b_negative, 0.0);
    EXPECT_EQ(r.a_on_boundary, 0.0);
    EXPECT_EQ(r.b_off_boundary, 0.0);
    EXPECT_LE(r.y_decrease, 0.0);
    for (std::size_t k = 0; k < s.z.size(); ++k) EXPECT_GE(s.z.vec(k).minCoeff(), 0.0);
    if (scheme == ReflectionScheme::kProjected) {
      EXPECT_LE(r.z_identity, 1e-9);
      EXPECT_LE(r.y_complementarity, cfg.tol.tau_zero);
      for (std::size_t k = 0; k < s.z.size(); ++k) EXPECT_TRUE(out.bridge_uniforms.vec(k).isZero(0.0));
    }
    // jump list from the stream equals the post-hoc extraction
    const auto post = extract_jumps(s, cfg.tol);
    ASSERT_EQ(post.size(), out.jumps.size());
    for (std::size_t n = 0; n < post.size(); ++n) {
      EXPECT_EQ(post[n].k, out.jumps[n].k);
      EXPECT_EQ(post[n].I, out.jumps[n].I);
      EXPECT_LE((post[n].delta_a - out.jumps[n].delta_a).cwiseAbs().maxCoeff(), 1e-12);
    }
    EXPECT_FALSE(out.jumps.empty());
  }
}

TEST(Simulate, OneDimensionalDerivativeMatchesOracle) {
  const auto model = one_dim(-1.0, 1.0);
  const auto out = simulate(model, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 1), short_config(20.0));
  const auto oracle = one_dim_derivative_oracle(out.solution.z, out.solution.active_sets);
  EXPECT_LE(weighted_sup_distance(out.solution.a, oracle, Eigen::VectorXd::Ones(1)), 1e-9);
}

TEST(CoupledPair, InteriorDifferenceIsRamp) {
  const auto spec = validate_reflection_matrices(Eigen::MatrixXd::Zero(2, 2));
  const DiffusionModel model(spec, Eigen::Vector2d(1, 1), Eigen::MatrixXd::Zero(2, 2));
  const auto pair = simulate_coupled_pair(model, Eigen::Vector2d(1, 1), 1e-3, 1, short_config());
  const auto& dq = pair.difference_quotient;
  for (std::size_t k = 0; k < dq.size(); ++k) {
    EXPECT_NEAR(dq.vec(k)(0), 0.0, 1e-9);
    EXPECT_NEAR(dq.vec(k)(1), dq.time(k), 1e-9);
  }
  EXPECT_LE(pair.sup_error, 1e-9);
}

TEST(CoupledPair, SharesNoiseAndConverges) {
  const auto model = two_dim();
  for (auto scheme : {ReflectionScheme::kProjected, ReflectionScheme::kBridge}) {
    auto cfg = short_config(3.0, 77);
    cfg.scheme = scheme;
    double prev = 1e300;
    for (double eps : {1e-2, 1e-3, 1e-4}) {
      const auto pair = simulate_coupled_pair(model, Eigen::Vector2d(0.5, 0.5), eps, 0, cfg, 2);
      EXPECT_TRUE(std::equal(pair.base.noise.data().begin(), pair.base.noise.data().end(),
                             pair.perturbed.noise.data().begin()));
      // the bridge minimum moves with the drift as well, leaving an O(dt) floor
      if (scheme == ReflectionScheme::kProjected) EXPECT_LE(pair.sup_error, prev + 1e-9);
      prev = pair.sup_error;
    }
    EXPECT_LT(prev, 0.05);
  }
}

TEST(CoupledPair, RejectsStateDependentDrift) {
  const auto spec = validate_reflection_matrices(Eigen::MatrixXd::Zero(1, 1));
  const DiffusionModel model(spec, Eigen::VectorXd::Constant(1, -1), Eigen::MatrixXd::Constant(1, 1, -0.5),
                             Eigen::MatrixXd::Ones(1, 1));
  try {
    simulate_coupled_pair(model, Eigen::VectorXd::Ones(1), 1e-3, 0, short_config());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStateDependentDriftUnsupported);
  }
}

TEST(Simulate, AffineDriftPullsTowardsMean) {
  // dZ = (1 - Z) dt + 0.1 dW from far away: stays near 1 without reflection.
  const auto spec = validate_reflection_matrices(Eigen::MatrixXd::Zero(1, 1));
  const DiffusionModel model(spec, Eigen::VectorXd::Constant(1, 1.0), Eigen::MatrixXd::Constant(1, 1, -1.0),
                             Eigen::MatrixXd::Constant(1, 1, 0.1));
  const auto out = simulate(model, Eigen::VectorXd::Constant(1, 3.0), Eigen::MatrixXd::Zero(1, 1),
                            short_config(10.0));
  EXPECT_NEAR(out.solution.z.vec(out.solution.z.size() - 1)(0), 1.0, 0.2);
}

TEST(Simulate, SecondMomentStaysBounded) {
  const auto model = two_dim();
  const auto out = simulate(model, Eigen::Vector2d(0, 0), Eigen::MatrixXd::Zero(2, 2), short_config(50.0, 3));
  double m = 0.0;
  for (std::size_t k = 0; k < out.solution.z.size(); ++k) m = std::max(m, out.solution.z.vec(k).squaredNorm());
  EXPECT_LT(m, 50.0);
}

TEST(Replications, OrderIndependentOfWorkers) {
  auto run = [](int workers) {
    return run_replications(9, workers, [](std::uint32_t id) { return id * 10u + 1u; });
  };
  EXPECT_EQ(run(1), run(4));
  EXPECT_EQ(run(3)[8], 81u);
  EXPECT_THROW(run_replications(3, 2, [](std::uint32_t id) -> int {
                 if (id == 1) throw Error(ErrorCode::kNoConvergence, "x");
                 return 0;
               }),
               Error);
}

}  // namespace
}  // namespace skosens
