#include "skosens/skorohod.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "skosens/error.hpp"

namespace skosens {
namespace {

void check_input(const GridPath& x, const ReflectionSpec& spec) {
  x.validate();
  if (!x.is_vector()) throw Error(ErrorCode::kShapeMismatch, "reflection input must be vector-valued");
  if (x.rows() != spec.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "input dimension does not match reflection matrix");
  }
}

// Stop once the a-posteriori bound increment * eta / (1 - eta) on the distance
// to the fixed point is within tau_fp.
double stopping_increment(const ReflectionSpec& spec, const ToleranceConfig& tol) {
  return tol.tau_fp * (1.0 - spec.eta());
}

// Exact solve on the support of the converged iterate:
// dy_I = (R_I^I)^{-1} (-v_I). Kept only if it is still a complementary
// solution, which removes the tau_fp residue of the iteration.
void polish(const ReflectionSpec& spec, std::span<const double> v, std::span<double> dy) {
  const int J = spec.dim();
  IndexSet I;
  int idx[64];
  int n = 0;
  for (int i = 0; i < J; ++i) {
    if (dy[i] > 0.0) {
      I.insert(i);
      idx[n++] = i;
    }
  }
  if (n == 0) return;
  const Eigen::MatrixXd& inv = spec.principal_inverse(I);
  double exact[64];
  for (int r = 0; r < n; ++r) {
    double s = 0.0;
    for (int c = 0; c < n; ++c) s -= inv(r, c) * v[idx[c]];
    if (!(s > 0.0)) return;
    exact[r] = s;
  }
  const auto& R = spec.R();
  for (int i = 0; i < J; ++i) {
    if (I.contains(i)) continue;
    double zi = v[i];
    for (int r = 0; r < n; ++r) zi += R(i, idx[r]) * exact[r];
    if (zi < -1e-14 * (1.0 + std::abs(v[i]))) return;
  }
  for (int r = 0; r < n; ++r) dy[idx[r]] = exact[r];
}

}  // namespace

int solve_step_complementarity(const ReflectionSpec& spec, std::span<const double> v,
                               std::span<double> dy, const ToleranceConfig& tol) {
  const int J = spec.dim();
  const auto& P = spec.P();
  const auto& w = spec.weights();
  bool any_negative = false;
  for (int i = 0; i < J; ++i) {
    dy[i] = 0.0;
    any_negative = any_negative || v[i] < 0.0;
  }
  if (!any_negative) return 0;

  const double stop = stopping_increment(spec, tol);
  double next[64];
  for (int it = 1; it <= tol.max_iters; ++it) {
    double inc = 0.0;
    for (int i = 0; i < J; ++i) {
      double push = -v[i];
      for (int j = 0; j < J; ++j) push += P(i, j) * dy[j];
      next[i] = push > 0.0 ? push : 0.0;
      inc = std::max(inc, std::abs(next[i] - dy[i]) / w(i));
    }
    for (int i = 0; i < J; ++i) dy[i] = next[i];
    if (inc <= stop) {
      polish(spec, v, dy);
      return it;
    }
  }
  throw Error(ErrorCode::kNoConvergence,
              "per-step complementarity did not converge in " + std::to_string(tol.max_iters) +
                  " iterations");
}

ReflectionSolution skorohod_per_step(const GridPath& x, const ReflectionSpec& spec,
                                     const ToleranceConfig& tol) {
  check_input(x, spec);
  tol.validate();
  const int J = spec.dim();
  const auto& R = spec.R();
  ReflectionSolution sol{x, GridPath(x.t0(), x.dt(), J, 1, x.size()),
                         GridPath(x.t0(), x.dt(), J, 1, x.size())};
  Eigen::VectorXd v(J), dy(J), y = Eigen::VectorXd::Zero(J), z_prev = Eigen::VectorXd::Zero(J);
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (k == 0) {
      v = x.vec(0);
    } else {
      v = z_prev + (x.vec(k) - x.vec(k - 1));
    }
    solve_step_complementarity(spec, {v.data(), static_cast<std::size_t>(J)},
                               {dy.data(), static_cast<std::size_t>(J)}, tol);
    y += dy;
    Eigen::VectorXd z = v + R * dy;
    for (int i = 0; i < J; ++i) {
      if (dy(i) > 0.0) z(i) = 0.0;
    }
    sol.y.vec(k) = y;
    sol.z.vec(k) = z;
    z_prev = z;
  }
  return sol;
}

ReflectionSolution skorohod_fixed_point(const GridPath& x, const ReflectionSpec& spec,
                                        const ToleranceConfig& tol, SolverStats* stats) {
  check_input(x, spec);
  tol.validate();
  const int J = spec.dim();
  const auto& P = spec.P();
  const auto& w = spec.weights();
  const std::size_t K = x.size();
  GridPath y(x.t0(), x.dt(), J, 1, K);
  GridPath next(x.t0(), x.dt(), J, 1, K);
  const double stop = stopping_increment(spec, tol);
  if (stats) *stats = {};

  bool converged = false;
  for (int it = 1; it <= tol.max_iters; ++it) {
    Eigen::VectorXd running = Eigen::VectorXd::Zero(J);
    double inc = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const Eigen::VectorXd candidate = P * y.vec(k) - x.vec(k);
      running = running.cwiseMax(candidate);
      next.vec(k) = running;
      for (int i = 0; i < J; ++i) {
        inc = std::max(inc, std::abs(running(i) - y.vec(k)(i)) / w(i));
      }
    }
    std::swap(y, next);
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
                "Skorohod fixed point did not converge in " + std::to_string(tol.max_iters) +
                    " iterations");
  }

  ReflectionSolution sol{x, std::move(y), GridPath(x.t0(), x.dt(), J, 1, K)};
  for (std::size_t k = 0; k < K; ++k) sol.z.vec(k) = x.vec(k) + spec.R() * sol.y.vec(k);
  return sol;
}

ReflectionSolution one_dim_reflection_oracle(const GridPath& x) {
  x.validate();
  if (x.rows() != 1 || !x.is_vector()) {
    throw Error(ErrorCode::kDimensionMismatch, "one-dimensional oracle needs J = 1");
  }
  ReflectionSolution sol{x, GridPath(x.t0(), x.dt(), 1, 1, x.size()),
                         GridPath(x.t0(), x.dt(), 1, 1, x.size())};
  double running = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    running = std::max(running, -x.vec(k)(0));
    sol.y.vec(k)(0) = running;
    sol.z.vec(k)(0) = x.vec(k)(0) + running;
  }
  return sol;
}

}  // namespace skosens
