#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "random_inputs.hpp"
#include "skosens/error.hpp"
#include "skosens/operators.hpp"

namespace skosens {
namespace {

Eigen::MatrixXd random_nonneg(int r, int c, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(0.0, scale);
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) m(i, j) = u(rng);
  }
  return m;
}

// P~ entrywise below P, so max(P, P~) = P stays a contraction.
ReflectionSpec tilde_spec(int J, std::mt19937_64& rng) {
  const Eigen::MatrixXd P = testing::random_P(J, rng);
  return validate_reflection_matrices(P, P.cwiseProduct(random_nonneg(J, J, rng)));
}

TEST(ProjectQ, Examples) {
  Eigen::MatrixXd P(2, 2);
  P << 0, 0.5, 0.5, 0;
  const auto spec = validate_reflection_matrices(P);
  Eigen::MatrixXd a(2, 2);
  a << 1, 2, 4, 6;
  EXPECT_EQ(project_Q(a, IndexSet(), spec), a);
  Eigen::MatrixXd expect(2, 2);
  expect << 3, 5, 0, 0;
  EXPECT_LE((project_Q(a, IndexSet::of({1}), spec) - expect).cwiseAbs().maxCoeff(), 1e-15);
  const auto id = validate_reflection_matrices(Eigen::MatrixXd::Zero(2, 2));
  Eigen::MatrixXd zero_row = a;
  zero_row.row(0).setZero();
  EXPECT_EQ(project_Q(a, IndexSet::of({0}), id), zero_row);
}

TEST(ProjectQ, ProjectionLawAndRowAnnihilation) {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 200; ++rep) {
    const int J = 1 + rep % 4;
    const auto spec = tilde_spec(J, rng);
    const Eigen::MatrixXd a = random_nonneg(J, J, rng, 3.0);
    for (std::uint64_t Ibits = 0; Ibits < (1u << J); ++Ibits) {
      const IndexSet I(Ibits);
      const Eigen::MatrixXd qa = project_Q(a, I, spec);
      for (int i : I.indices()) EXPECT_LE(qa.row(i).cwiseAbs().maxCoeff(), 1e-12);
      for (std::uint64_t Kbits = Ibits;; Kbits = (Kbits - 1) & Ibits) {
        const Eigen::MatrixXd qq = project_Q(project_Q(a, IndexSet(Kbits), spec), I, spec);
        EXPECT_LE((qq - qa).cwiseAbs().maxCoeff(), 1e-12);
        if (Kbits == 0) break;
      }
      // Q_I a = a - R~^I (R~_I^I)^{-1} a_I, checked against a dense solve
      if (!I.empty()) {
        const auto idx = I.indices();
        const auto n = static_cast<Eigen::Index>(idx.size());
        Eigen::MatrixXd RII(n, n), RI(J, n), aI(n, J);
        for (Eigen::Index r = 0; r < n; ++r) {
          RI.col(r) = spec.R_tilde().col(idx[r]);
          aI.row(r) = a.row(idx[r]);
          for (Eigen::Index c = 0; c < n; ++c) RII(r, c) = spec.R_tilde()(idx[r], idx[c]);
        }
        const Eigen::MatrixXd dense = a - RI * RII.partialPivLu().solve(aI);
        EXPECT_LE((dense - qa).cwiseAbs().maxCoeff(), 1e-12);
      }
    }
  }
}

TEST(ExpandOI, OneDimensionalDecomposition) {
  const auto spec = validate_reflection_matrices(Eigen::MatrixXd::Zero(1, 1));
  const ExpTestFunction f{Eigen::VectorXd::Constant(1, 1.3), Eigen::MatrixXd::Constant(1, 1, 0.7)};
  const auto terms = expand_O(f, spec);
  for (double z : {0.0, 0.4, 2.0}) {
    for (double a : {0.0, 0.5, 3.0}) {
      const Eigen::VectorXd zv = Eigen::VectorXd::Constant(1, z);
      const Eigen::MatrixXd av = Eigen::MatrixXd::Constant(1, 1, a);
      const double expect = f(zv, av) - f(Eigen::VectorXd::Zero(1), av) +
                            f(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 1));
      EXPECT_NEAR(evaluate(terms, zv, av), expect, 1e-15);
    }
  }
}

TEST(ExpandOI, TermCountAndClassicalReduction) {
  std::mt19937_64 rng(2);
  for (int J = 1; J <= 4; ++J) {
    const auto spec = validate_reflection_matrices(testing::random_P(J, rng));
    const ExpTestFunction f{random_nonneg(J, 1, rng), Eigen::MatrixXd::Zero(J, J)};
    for (std::uint64_t bits = 0; bits < (1u << J); ++bits) {
      EXPECT_EQ(expand_O_I(f, IndexSet(bits), spec).size(), std::size_t{1} << (J - std::popcount(bits)));
    }
    // f independent of a: O f = f
    const auto all = expand_O(f, spec);
    for (int rep = 0; rep < 10; ++rep) {
      const Eigen::VectorXd z = random_nonneg(J, 1, rng, 2.0);
      const Eigen::MatrixXd a = random_nonneg(J, J, rng, 2.0);
      EXPECT_NEAR(evaluate(all, z, a), f(z, a), 1e-13);
    }
  }
}

TEST(ExpandOI, MatchesDirectDefinition) {
  std::mt19937_64 rng(3);
  const int J = 3;
  const auto spec = tilde_spec(J, rng);
  const ExpTestFunction f{random_nonneg(J, 1, rng), random_nonneg(J, J, rng)};
  for (std::uint64_t bits = 0; bits < 8; ++bits) {
    const IndexSet I(bits);
    const auto terms = expand_O_I(f, I, spec);
    const Eigen::VectorXd z = random_nonneg(J, 1, rng, 2.0);
    const Eigen::MatrixXd a = random_nonneg(J, J, rng, 2.0);
    const Eigen::MatrixXd qa = project_Q(a, I, spec);
    double direct = 0.0;
    const auto free = I.complement(J);
    for (std::uint64_t S = 0; S < 8; ++S) {
      if (!IndexSet(S).subset_of(free)) continue;
      Eigen::VectorXd zp = z;
      for (int i : (IndexSet(S) | I).indices()) zp(i) = 0.0;
      direct += (std::popcount(S) % 2 ? -1.0 : 1.0) * f(zp, qa);
    }
    EXPECT_NEAR(evaluate(terms, z, a), direct, 1e-13);
  }
}

TEST(ExpandOI, VanishesOnOtherFaces) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 100; ++rep) {
    const int J = 2 + rep % 3;
    const auto spec = validate_reflection_matrices(testing::random_P(J, rng));
    const ExpTestFunction f{random_nonneg(J, 1, rng), random_nonneg(J, J, rng)};
    const IndexSet I(rng() & ((1u << J) - 1));
    const auto free = I.complement(J).indices();
    if (free.empty()) continue;
    Eigen::VectorXd z = random_nonneg(J, 1, rng, 2.0);
    z(free[rng() % free.size()]) = 0.0;
    const auto terms = expand_O_I(f, I, spec);
    EXPECT_LE(std::abs(evaluate(terms, z, random_nonneg(J, J, rng, 2.0))), 1e-14);
  }
}

TEST(ApplyT, ClosedForms) {
  const auto spec1 = validate_reflection_matrices(Eigen::MatrixXd::Zero(1, 1));
  const double theta = -0.7, sigma = 1.3, alpha = 0.8, eta = 0.6;
  const DiffusionModel m1(spec1, Eigen::VectorXd::Constant(1, theta), Eigen::MatrixXd::Constant(1, 1, sigma));
  const LinearExpTerm f{1.0, Eigen::VectorXd::Constant(1, alpha), Eigen::MatrixXd::Constant(1, 1, eta)};
  const Eigen::VectorXd z = Eigen::VectorXd::Constant(1, 0.9);
  const Eigen::MatrixXd a = Eigen::MatrixXd::Constant(1, 1, 0.4);
  const double expect = (0.5 * sigma * sigma * alpha * alpha - theta * alpha - eta) * f(z, a);
  EXPECT_NEAR(apply_T(f, m1, z, a), expect, 1e-15);
  const LinearExpTerm constant{1.0, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 1)};
  EXPECT_EQ(apply_T(constant, m1, z, a), 0.0);
}

TEST(ApplyT, MatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  const int J = 3;
  const auto spec = validate_reflection_matrices(testing::random_P(J, rng));
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd sigma(J, 2), Theta(J, J);
  for (int i = 0; i < J; ++i) {
    for (int j = 0; j < 2; ++j) sigma(i, j) = n(rng);
    for (int j = 0; j < J; ++j) Theta(i, j) = 0.3 * n(rng);
  }
  const DiffusionModel model(spec, Eigen::Vector3d(-1, 0.5, -0.2), Theta, sigma);
  const Eigen::MatrixXd Sigma = model.covariance();
  for (int rep = 0; rep < 100; ++rep) {
    const LinearExpTerm g{rep % 2 ? -1.0 : 1.0, random_nonneg(J, 1, rng), random_nonneg(J, J, rng, 0.5)};
    const Eigen::VectorXd z = random_nonneg(J, 1, rng, 2.0);
    const Eigen::MatrixXd a = random_nonneg(J, J, rng, 2.0);
    const double h = 1e-4;
    Eigen::VectorXd grad(J);
    Eigen::MatrixXd hess(J, J);
    for (int i = 0; i < J; ++i) {
      Eigen::VectorXd ei = Eigen::VectorXd::Unit(J, i) * h;
      grad(i) = (g(z + ei, a) - g(z - ei, a)) / (2 * h);
      for (int j = 0; j < J; ++j) {
        Eigen::VectorXd ej = Eigen::VectorXd::Unit(J, j) * h;
        hess(i, j) = (g(z + ei + ej, a) - g(z + ei - ej, a) - g(z - ei + ej, a) + g(z - ei - ej, a)) /
                     (4 * h * h);
      }
    }
    double trace = 0.0;
    for (int i = 0; i < J; ++i) {
      Eigen::MatrixXd e = Eigen::MatrixXd::Zero(J, J);
      e(i, i) = h;
      trace += (g(z, a + e) - g(z, a - e)) / (2 * h);
    }
    const double fd = 0.5 * (Sigma.cwiseProduct(hess)).sum() + model.drift(z).dot(grad) + trace;
    const double exact = apply_T(g, model, z, a);
    EXPECT_NEAR(fd, exact, 1e-6 * std::max(1.0, std::abs(exact)));
    const Eigen::VectorXd rg = reflected_gradient(g, spec, z, a);
    EXPECT_LE((rg - spec.R().transpose() * grad).cwiseAbs().maxCoeff(), 1e-7);
  }
}

TEST(Laplace1d, Values) {
  EXPECT_NEAR(laplace_1d(1, 1, -1, 1), 2.0 / (2.0 + std::sqrt(3.0)), 1e-15);
  EXPECT_NEAR(laplace_1d(1, 1, -1, 1), 0.535898, 1e-6);
  EXPECT_DOUBLE_EQ(laplace_1d(0, 0, -1.3, 0.7), 1.0);
  EXPECT_NEAR(laplace_1d(1e-9, 1e-9, -1, 1), 1.0, 1e-8);
  for (double alpha : {0.5, 1.0, 2.0}) {
    EXPECT_NEAR(laplace_1d(alpha, 0, -0.8, 1.5), 1.6 / (alpha * 1.5 + 1.6), 1e-15);
  }
  for (double eta : {0.5, 1.0, 2.0}) {
    EXPECT_NEAR(laplace_1d(0, eta, -0.8, 1.5), laplace_1d_a_marginal(eta, -0.8, 1.5), 1e-14);
  }
  // d/deta at 0 gives -E[A] = -sigma2 / (2 theta^2)
  const double h = 1e-6;
  EXPECT_NEAR((1.0 - laplace_1d_a_marginal(h, -1, 1)) / h, 0.5, 1e-5);
  // d/dalpha at 0 gives -E[Z] = -sigma2 / (2 |theta|)
  EXPECT_NEAR((1.0 - laplace_1d(h, 0, -2, 1)) / h, 0.25, 1e-5);
  for (auto bad : {std::array{1.0, 1.0, 1.0, 1.0}, std::array{1.0, 1.0, -1.0, 0.0},
                   std::array{-1.0, 1.0, -1.0, 1.0}, std::array{1.0, -1.0, -1.0, 1.0}}) {
    try {
      laplace_1d(bad[0], bad[1], bad[2], bad[3]);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kDomainError);
    }
  }
}

TEST(ExpTestFunction, Validation) {
  ExpTestFunction f{Eigen::Vector2d(1, -1), Eigen::MatrixXd::Zero(2, 2)};
  EXPECT_THROW(f.validate(2), Error);
  f.eta = Eigen::Vector3d::Zero();
  EXPECT_THROW(f.validate(2), Error);
}

}  // namespace
}  // namespace skosens
