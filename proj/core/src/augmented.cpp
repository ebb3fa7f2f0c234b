#include "skosens/augmented.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "skosens/error.hpp"

namespace skosens {
namespace {

void check_chi(const GridPath& chi, const GridPath& x, int J) {
  chi.validate();
  if (chi.rows() != J || chi.cols() != J) {
    throw Error(ErrorCode::kShapeMismatch, "chi must be J x J");
  }
  if (!chi.same_grid(x)) throw Error(ErrorCode::kShapeMismatch, "chi and x grids differ");
  for (std::size_t k = 0; k < chi.size(); ++k) {
    if (chi.at(k).minCoeff() < 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "chi must be entrywise nonnegative");
    }
    if (k > 0 && (chi.at(k) - chi.at(k - 1)).minCoeff() < 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "chi must be entrywise nondecreasing");
    }
  }
}

}  // namespace

AugmentedStepper::AugmentedStepper(ReflectionSpec spec, ToleranceConfig tol)
    : spec_(std::move(spec)), tol_(tol), rhs_(spec_.dim(), spec_.dim()),
      solved_(spec_.dim(), spec_.dim()) {}

void AugmentedStepper::advance(const Eigen::Ref<const Eigen::MatrixXd>& chi_k, IndexSet I,
                               Eigen::Ref<Eigen::MatrixXd> b, Eigen::Ref<Eigen::MatrixXd> a) {
  const int J = spec_.dim();
  const auto& Pt = spec_.P_tilde();
  if (!I.empty()) {
    int idx[64];
    int n = 0;
    for (int i = 0; i < J; ++i) {
      if (I.contains(i)) idx[n++] = i;
    }
    // rhs = chi_I + P~_I^{I^c} b_{I^c}
    for (int r = 0; r < n; ++r) {
      const int i = idx[r];
      for (int col = 0; col < J; ++col) {
        double s = chi_k(i, col);
        for (int l = 0; l < J; ++l) {
          if (!I.contains(l)) s += Pt(i, l) * b(l, col);
        }
        rhs_(r, col) = s;
      }
    }
    const Eigen::MatrixXd& inv = spec_.tilde_principal_inverse(I);
    for (int r = 0; r < n; ++r) {
      for (int col = 0; col < J; ++col) {
        double s = 0.0;
        for (int c = 0; c < n; ++c) s += inv(r, c) * rhs_(c, col);
        solved_(r, col) = s;
      }
    }
    for (int r = 0; r < n; ++r) {
      const int i = idx[r];
      for (int col = 0; col < J; ++col) {
        const double prev = b(i, col);
        const double next = solved_(r, col);
        if (next < prev - tol_.tau_zero * (1.0 + std::abs(prev))) {
          throw Error(ErrorCode::kMonotonicityViolation,
                      "b decreased at row " + std::to_string(i + 1) + "; check tau_zero");
        }
        b(i, col) = std::max(prev, next);
      }
    }
  }
  // a = chi - (E - P~) b
  for (int i = 0; i < J; ++i) {
    if (I.contains(i)) {
      a.row(i).setZero();
      continue;
    }
    for (int col = 0; col < J; ++col) {
      double s = chi_k(i, col) - b(i, col);
      for (int l = 0; l < J; ++l) s += Pt(i, l) * b(l, col);
      a(i, col) = s;
    }
  }
}

std::vector<IndexSet> boundary_sets(const GridPath& z, const ToleranceConfig& tol) {
  const auto J = static_cast<int>(z.rows());
  std::vector<IndexSet> sets(z.size());
  std::vector<double> running(static_cast<std::size_t>(J), 0.0);
  for (std::size_t k = 0; k < z.size(); ++k) {
    const auto zk = z.vec(k);
    for (int i = 0; i < J; ++i) {
      running[i] = std::max(running[i], std::abs(zk(i)));
      if (zk(i) <= tol.zero_threshold(running[i])) sets[k].insert(i);
    }
  }
  return sets;
}

AugmentedSolution solve_augmented_from(const ReflectionSolution& reflected, const GridPath& chi,
                                       std::vector<IndexSet> active_sets,
                                       const ReflectionSpec& spec, const ToleranceConfig& tol) {
  const int J = spec.dim();
  check_chi(chi, reflected.x, J);
  if (active_sets.size() != chi.size()) {
    throw Error(ErrorCode::kShapeMismatch, "one active set per grid point required");
  }
  AugmentedSolution sol{reflected.x, reflected.y, reflected.z, chi,
                        GridPath(chi.t0(), chi.dt(), J, J, chi.size()),
                        GridPath(chi.t0(), chi.dt(), J, J, chi.size()), std::move(active_sets)};
  AugmentedStepper stepper(spec, tol);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(J, J);
  Eigen::MatrixXd a(J, J);
  for (std::size_t k = 0; k < chi.size(); ++k) {
    stepper.advance(chi.at(k), sol.active_sets[k], b, a);
    sol.b.at(k) = b;
    sol.a.at(k) = a;
  }
  return sol;
}

AugmentedSolution solve_augmented(const GridPath& x, const GridPath& chi,
                                  const ReflectionSpec& spec, const ToleranceConfig& tol) {
  auto reflected = skorohod_per_step(x, spec, tol);
  auto sets = boundary_sets(reflected.z, tol);
  return solve_augmented_from(reflected, chi, std::move(sets), spec, tol);
}

AugmentedSolution solve_augmented_reference(const GridPath& x, const GridPath& chi,
                                            const ReflectionSpec& spec,
                                            const ToleranceConfig& tol, SolverStats* stats) {
  const int J = spec.dim();
  auto reflected = skorohod_fixed_point(x, spec, tol);
  check_chi(chi, x, J);
  auto sets = boundary_sets(reflected.z, tol);
  const std::size_t K = chi.size();
  const auto& Pt = spec.P_tilde();
  const auto& w = spec.weights();
  const double stop = tol.tau_fp * (1.0 - spec.eta());

  GridPath b(chi.t0(), chi.dt(), J, J, K);
  GridPath next(chi.t0(), chi.dt(), J, J, K);
  if (stats) *stats = {};
  bool converged = false;
  for (int it = 1; it <= tol.max_iters; ++it) {
    Eigen::MatrixXd running = Eigen::MatrixXd::Zero(J, J);
    double inc = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const Eigen::MatrixXd candidate = chi.at(k) + Pt * b.at(k);
      for (int i = 0; i < J; ++i) {
        if (sets[k].contains(i)) running.row(i) = running.row(i).cwiseMax(candidate.row(i));
      }
      next.at(k) = running;
      for (int i = 0; i < J; ++i) {
        inc = std::max(inc, (running.row(i) - b.at(k).row(i)).cwiseAbs().maxCoeff() / w(i));
      }
    }
    std::swap(b, next);
    if (stats) {
      stats->iterations = it;
      stats->increments.push_back(inc);
    }
    if (inc <= stop) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw Error(ErrorCode::kNoConvergence,
                "augmented fixed point did not converge in " + std::to_string(tol.max_iters) +
                    " iterations");
  }

  AugmentedSolution sol{reflected.x, reflected.y, reflected.z, chi,
                        GridPath(chi.t0(), chi.dt(), J, J, K), std::move(b), std::move(sets)};
  for (std::size_t k = 0; k < K; ++k) {
    sol.a.at(k) = chi.at(k) - spec.R_tilde() * sol.b.at(k);
  }
  return sol;
}

GridPath identity_ramp(const GridPath& like, int dim) {
  const Eigen::MatrixXd E = Eigen::MatrixXd::Identity(dim, dim);
  GridPath chi(like.t0(), like.dt(), dim, dim, like.size());
  for (std::size_t k = 0; k < like.size(); ++k) {
    chi.at(k) = (static_cast<double>(k) * like.dt()) * E;
  }
  return chi;
}

AugmentedSolution derivative_process(const GridPath& x, const ReflectionSpec& spec,
                                     const ToleranceConfig& tol) {
  if (!spec.tilde_equals_plain()) {
    throw Error(ErrorCode::kInvalidArgument, "derivative_process needs P_tilde == P");
  }
  x.validate();
  return solve_augmented(x, identity_ramp(x, spec.dim()), spec, tol);
}

GridPath one_dim_derivative_oracle(const GridPath& z, const std::vector<IndexSet>& contacts) {
  z.validate();
  if (z.rows() != 1 || !z.is_vector()) {
    throw Error(ErrorCode::kDimensionMismatch, "one-dimensional derivative oracle needs J = 1");
  }
  if (contacts.size() != z.size()) {
    throw Error(ErrorCode::kShapeMismatch, "one contact flag per grid point required");
  }
  GridPath a(z.t0(), z.dt(), 1, 1, z.size());
  double last_contact = z.t0();
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (contacts[k].contains(0)) last_contact = z.time(k);
    a.vec(k)(0) = z.time(k) - last_contact;
  }
  return a;
}

GridPath one_dim_derivative_oracle(const GridPath& z, const ToleranceConfig& tol) {
  if (z.rows() != 1 || !z.is_vector()) {
    throw Error(ErrorCode::kDimensionMismatch, "one-dimensional derivative oracle needs J = 1");
  }
  return one_dim_derivative_oracle(z, boundary_sets(z, tol));
}

GridPath finite_difference_derivative(const GridPath& x, const ReflectionSpec& spec,
                                      double epsilon, int j, const ToleranceConfig& tol) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
  if (j < 0 || j >= spec.dim()) throw Error(ErrorCode::kInvalidArgument, "column index out of range");
  GridPath shifted = x;
  for (std::size_t k = 0; k < x.size(); ++k) {
    shifted.vec(k)(j) -= epsilon * (static_cast<double>(k) * x.dt());
  }
  const auto base = skorohod_per_step(x, spec, tol);
  const auto perturbed = skorohod_per_step(shifted, spec, tol);
  GridPath out(x.t0(), x.dt(), spec.dim(), 1, x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    out.vec(k) = (base.z.vec(k) - perturbed.z.vec(k)) / epsilon;
  }
  return out;
}

std::vector<JumpEvent> extract_jumps(const AugmentedSolution& sol, const ToleranceConfig& tol) {
  std::vector<JumpEvent> events;
  const double threshold = tol.jump_threshold();
  for (std::size_t k = 1; k < sol.a.size(); ++k) {
    Eigen::MatrixXd a_before = sol.a.at(k - 1) + (sol.chi.at(k) - sol.chi.at(k - 1));
    Eigen::MatrixXd delta_a = sol.a.at(k) - a_before;
    if (delta_a.cwiseAbs().sum() <= threshold) continue;
    events.push_back(JumpEvent{k, sol.a.time(k), sol.active_sets[k], std::move(delta_a),
                               sol.b.at(k) - sol.b.at(k - 1), std::move(a_before)});
  }
  return events;
}

AugmentedConditionReport check_augmented_conditions(const AugmentedSolution& sol,
                                                    const ReflectionSpec& spec) {
  AugmentedConditionReport r;
  const int J = spec.dim();
  for (std::size_t k = 0; k < sol.z.size(); ++k) {
    const auto z = sol.z.vec(k);
    const auto y = sol.y.vec(k);
    const Eigen::VectorXd dy = k == 0 ? Eigen::VectorXd(y) : Eigen::VectorXd(y - sol.y.vec(k - 1));
    r.z_identity = std::max(r.z_identity, (z - sol.x.vec(k) - spec.R() * y).cwiseAbs().maxCoeff());
    const auto a = sol.a.at(k);
    const auto b = sol.b.at(k);
    r.a_identity =
        std::max(r.a_identity, (a - sol.chi.at(k) + spec.R_tilde() * b).cwiseAbs().maxCoeff());
    r.b_negative = std::max(r.b_negative, -b.minCoeff());
    if (k == 0) {
      r.y_start = y.cwiseAbs().maxCoeff();
      r.b_start = b.cwiseAbs().maxCoeff();
    } else {
      r.y_decrease = std::max(r.y_decrease, -dy.minCoeff());
      r.b_decrease = std::max(r.b_decrease, -(b - sol.b.at(k - 1)).minCoeff());
    }
    for (int i = 0; i < J; ++i) {
      r.y_complementarity = std::max(r.y_complementarity, std::min(z(i), dy(i)));
      if (sol.active_sets[k].contains(i)) {
        r.a_on_boundary = std::max(r.a_on_boundary, a.row(i).cwiseAbs().maxCoeff());
      } else if (k > 0) {
        r.b_off_boundary =
            std::max(r.b_off_boundary, (b.row(i) - sol.b.at(k - 1).row(i)).cwiseAbs().maxCoeff());
      }
    }
  }
  return r;
}

}  // namespace skosens
