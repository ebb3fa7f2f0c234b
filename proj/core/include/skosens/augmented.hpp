#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "skosens/grid_path.hpp"
#include "skosens/index_set.hpp"
#include "skosens/reflection.hpp"
#include "skosens/skorohod.hpp"

namespace skosens {

/// Discrete solution (z, y, a, b) of the augmented Skorohod problem for (x, chi).
struct AugmentedSolution {
  GridPath x;
  GridPath y;
  GridPath z;
  GridPath chi;  ///< J x J input, entrywise nonnegative and nondecreasing
  GridPath a;    ///< a = chi - R~ b
  GridPath b;
  /// I_k: coordinates regarded as being on the boundary at grid point k.
  std::vector<IndexSet> active_sets;
};

struct JumpEvent {
  std::size_t k = 0;
  double time = 0.0;
  IndexSet I;
  Eigen::MatrixXd delta_a;   ///< a(t_k) - a_before
  Eigen::MatrixXd delta_b;   ///< b(t_k) - b(t_{k-1})
  Eigen::MatrixXd a_before;  ///< a(t_{k-1}) + chi(t_k) - chi(t_{k-1})
};

/// Forward recursion for b. Rows outside the active set keep their value;
/// rows in I solve b_I = (E - P~_I^I)^{-1} [chi_I + P~_I^{I^c} b_{I^c}], which
/// puts a_I = 0. Owns scratch space, so use one instance per path.
class AugmentedStepper {
 public:
  AugmentedStepper(ReflectionSpec spec, ToleranceConfig tol);

  /// Advances b (in place) to a grid point with input chi_k and active set I
  /// and writes a = chi_k - R~ b into `a`. Throws MonotonicityViolation if a
  /// row of b would decrease by more than the tolerance.
  void advance(const Eigen::Ref<const Eigen::MatrixXd>& chi_k, IndexSet I,
               Eigen::Ref<Eigen::MatrixXd> b, Eigen::Ref<Eigen::MatrixXd> a);

  const ReflectionSpec& spec() const { return spec_; }

 private:
  ReflectionSpec spec_;
  ToleranceConfig tol_;
  Eigen::MatrixXd rhs_;
  Eigen::MatrixXd solved_;
};

/// I_k = {i : z_i(t_k) <= tau_zero * (1 + running max |z_i|)}.
std::vector<IndexSet> boundary_sets(const GridPath& z, const ToleranceConfig& tol);

/// Forward recursion on a reflected path with prescribed active sets.
AugmentedSolution solve_augmented_from(const ReflectionSolution& reflected, const GridPath& chi,
                                       std::vector<IndexSet> active_sets,
                                       const ReflectionSpec& spec, const ToleranceConfig& tol);

/// (z, y) from skorohod_per_step, then b by the forward recursion and
/// a = chi - R~ b.
AugmentedSolution solve_augmented(const GridPath& x, const GridPath& chi,
                                  const ReflectionSpec& spec, const ToleranceConfig& tol = {});

/// Reference solver: (z, y) from skorohod_fixed_point and b as the fixed point of
///   b_i^j(t_k) = max_{m<=k, i in I_m} [chi_i^j(t_m) + (P~ b)_i^j(t_m)]   (0 if no such m),
/// iterated from b = 0.
AugmentedSolution solve_augmented_reference(const GridPath& x, const GridPath& chi,
                                            const ReflectionSpec& spec,
                                            const ToleranceConfig& tol = {},
                                            SolverStats* stats = nullptr);

/// chi(t) = (t - t0) E; requires P~ == P.
GridPath identity_ramp(const GridPath& like, int dim);
AugmentedSolution derivative_process(const GridPath& x, const ReflectionSpec& spec,
                                     const ToleranceConfig& tol = {});

/// J = 1 closed form a(t_k) = t_k - (last grid time with z <= threshold),
/// falling back to t0 before the first contact.
GridPath one_dim_derivative_oracle(const GridPath& z, const ToleranceConfig& tol = {});
/// Same with an explicit per-grid-point contact indicator.
GridPath one_dim_derivative_oracle(const GridPath& z, const std::vector<IndexSet>& contacts);

/// (Gamma(x) - Gamma(x - eps * chi^j)) / eps with chi^j(t) = (t - t0) e_j,
/// both reflections by skorohod_per_step. Column j of the result approximates a^j.
GridPath finite_difference_derivative(const GridPath& x, const ReflectionSpec& spec,
                                      double epsilon, int j, const ToleranceConfig& tol = {});

/// Steps where a(t_k) - a(t_{k-1}) deviates from the chi increment by more than
/// tol.jump_threshold() in entrywise 1-norm.
std::vector<JumpEvent> extract_jumps(const AugmentedSolution& sol, const ToleranceConfig& tol = {});

/// Largest violation of each discrete augmented-Skorohod condition.
struct AugmentedConditionReport {
  double z_identity = 0.0;         ///< |z - x - R y|
  double y_start = 0.0;            ///< |y(t0)|
  double y_decrease = 0.0;         ///< max(-dy)
  double y_complementarity = 0.0;  ///< max min(z_i(t_k), dy_i(k))
  double a_identity = 0.0;         ///< |a - chi + R~ b|
  double b_start = 0.0;            ///< |b(t0)|
  double b_negative = 0.0;         ///< max(-b)
  double b_decrease = 0.0;         ///< max(-db)
  double b_off_boundary = 0.0;     ///< |db_i| for i outside I_k
  double a_on_boundary = 0.0;      ///< |a_i| for i in I_k
};
AugmentedConditionReport check_augmented_conditions(const AugmentedSolution& sol,
                                                    const ReflectionSpec& spec);

}  // namespace skosens
