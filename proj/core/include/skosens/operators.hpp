#pragma once

#include <vector>

#include <Eigen/Dense>

#include "skosens/index_set.hpp"
#include "skosens/reflection.hpp"
#include "skosens/sder.hpp"

namespace skosens {

/// f(z, a) = exp(-eta' z - <alpha, a>_HS), eta >= 0 and alpha >= 0.
struct ExpTestFunction {
  Eigen::VectorXd eta;
  Eigen::MatrixXd alpha;

  void validate(int dim) const;
  double operator()(const Eigen::Ref<const Eigen::VectorXd>& z,
                    const Eigen::Ref<const Eigen::MatrixXd>& a) const;
};

/// c * exp(-u' z - <V, a>_HS).
struct LinearExpTerm {
  double coefficient = 1.0;
  Eigen::VectorXd z_weights;
  Eigen::MatrixXd a_weights;

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& z,
                    const Eigen::Ref<const Eigen::MatrixXd>& a) const;
};

using TermList = std::vector<LinearExpTerm>;

TermList as_terms(const ExpTestFunction& f);
double evaluate(const TermList& terms, const Eigen::Ref<const Eigen::VectorXd>& z,
                const Eigen::Ref<const Eigen::MatrixXd>& a);

/// M_I = E - R~^I (R~_I^I)^{-1} E_I, so that Q_I(a) = M_I a. M_empty = E.
Eigen::MatrixXd q_matrix(IndexSet I, const ReflectionSpec& spec);
/// Q_I(a) = a - R~^I (R~_I^I)^{-1} a_I.
Eigen::MatrixXd project_Q(const Eigen::Ref<const Eigen::MatrixXd>& a, IndexSet I,
                          const ReflectionSpec& spec);

/// O_I f as 2^{J-|I|} terms, one per S in the complement of I, with the
/// a-weights precomposed with Q_I.
TermList expand_O_I(const ExpTestFunction& f, IndexSet I, const ReflectionSpec& spec);
/// O f = sum over all I of O_I f.
TermList expand_O(const ExpTestFunction& f, const ReflectionSpec& spec);

/// Tg = Lg + tr(grad_a g) in closed form:
/// [0.5 u' Sigma u - theta(z)' u - tr(V)] g.
double apply_T(const LinearExpTerm& term, const DiffusionModel& model,
               const Eigen::Ref<const Eigen::VectorXd>& z,
               const Eigen::Ref<const Eigen::MatrixXd>& a);
double apply_T(const TermList& terms, const DiffusionModel& model,
               const Eigen::Ref<const Eigen::VectorXd>& z,
               const Eigen::Ref<const Eigen::MatrixXd>& a);
/// R' grad_z g = -(R' u) g.
Eigen::VectorXd reflected_gradient(const LinearExpTerm& term, const ReflectionSpec& spec,
                                   const Eigen::Ref<const Eigen::VectorXd>& z,
                                   const Eigen::Ref<const Eigen::MatrixXd>& a);

/// Stationary transform E[exp(-alpha Z - eta A)] of the 1-D reflected Brownian
/// motion with drift theta < 0 and variance sigma2 > 0. alpha, eta >= 0.
double laplace_1d(double alpha, double eta, double theta, double sigma2);
/// Same with alpha = 0: -theta (theta + sqrt(theta^2 + 2 sigma2 eta)) / (sigma2 eta).
double laplace_1d_a_marginal(double eta, double theta, double sigma2);

}  // namespace skosens
