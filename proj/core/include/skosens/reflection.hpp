#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "skosens/grid_path.hpp"
#include "skosens/index_set.hpp"

namespace skosens {

/// Numerical thresholds shared by the solvers.
struct ToleranceConfig {
  /// Relative boundary threshold: coordinate i counts as "at the boundary" at
  /// step k when z_i <= tau_zero * (1 + max_{m<=k} |z_i(t_m)|).
  double tau_zero = 1e-10;
  /// Fixed-point convergence threshold in the weighted sup norm.
  double tau_fp = 1e-12;
  int max_iters = 10'000;

  double zero_threshold(double running_max_abs) const {
    return tau_zero * (1.0 + running_max_abs);
  }
  /// Increments below this are treated as "no change" when classifying jumps.
  double jump_threshold() const { return 10.0 * tau_zero; }

  void validate() const;
};

/// Validated pair of reflection matrices R = E - P and R~ = E - P~ together
/// with contraction weights w > 0 and a factor eta < 1 such that
/// (P^ w)_i <= eta * w_i for P^ = max(P, P~) entrywise.
///
/// Immutable once built; copies share the cache of principal-submatrix
/// inverses (R~_I^I)^{-1}.
class ReflectionSpec {
 public:
  int dim() const { return static_cast<int>(P_.rows()); }
  const Eigen::MatrixXd& P() const { return P_; }
  const Eigen::MatrixXd& R() const { return R_; }
  const Eigen::MatrixXd& P_tilde() const { return P_tilde_; }
  const Eigen::MatrixXd& R_tilde() const { return R_tilde_; }
  const Eigen::VectorXd& weights() const { return w_; }
  double eta() const { return eta_; }
  double spectral_radius_P() const { return rho_P_; }
  double spectral_radius_P_tilde() const { return rho_P_tilde_; }
  /// True when P~ == P, i.e. the derivative-process setting.
  bool tilde_equals_plain() const { return P_ == P_tilde_; }

  /// (R~_I^I)^{-1}, indexed by the sorted members of I.
  const Eigen::MatrixXd& tilde_principal_inverse(IndexSet I) const;
  /// (R_I^I)^{-1} for the plain reflection matrix.
  const Eigen::MatrixXd& principal_inverse(IndexSet I) const;

 private:
  friend ReflectionSpec validate_reflection_matrices(const Eigen::MatrixXd&,
                                                     const Eigen::MatrixXd&);
  struct InverseCache;

  Eigen::MatrixXd P_, R_, P_tilde_, R_tilde_;
  Eigen::VectorXd w_;
  double eta_ = 0.0;
  double rho_P_ = 0.0;
  double rho_P_tilde_ = 0.0;
  std::shared_ptr<const InverseCache> cache_;
};

/// Power-iteration estimate of the spectral radius of |P| (200 iterations).
double estimate_spectral_radius(const Eigen::MatrixXd& P);

/// Checks P, P~ (nonnegative, zero diagonal, spectral radius < 1 - 1e-9) and
/// builds the contraction weights w = (E - P^)^{-1} 1.
/// Throws Error with NegativeEntry, NonzeroDiagonal, SpectralRadiusTooLarge or
/// ShapeMismatch.
ReflectionSpec validate_reflection_matrices(const Eigen::MatrixXd& P,
                                            const Eigen::MatrixXd& P_tilde);
inline ReflectionSpec validate_reflection_matrices(const Eigen::MatrixXd& P) {
  return validate_reflection_matrices(P, P);
}

/// max over grid points k and rows i of |a_i(t_k) - b_i(t_k)| / w_i; matrix
/// rows are reduced by the max over columns.
double weighted_sup_distance(const GridPath& a, const GridPath& b, const Eigen::VectorXd& w);

}  // namespace skosens
