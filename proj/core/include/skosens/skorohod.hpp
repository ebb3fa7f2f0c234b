#pragma once

#include <span>
#include <vector>

#include "skosens/grid_path.hpp"
#include "skosens/reflection.hpp"

namespace skosens {

/// Discrete solution of the oblique reflection problem z = x + R y on a grid.
struct ReflectionSolution {
  GridPath x;
  GridPath y;
  GridPath z;
};

/// Per-iteration bookkeeping of the fixed-point solvers.
struct SolverStats {
  int iterations = 0;
  /// Weighted sup distance between successive iterates, one per iteration.
  std::vector<double> increments;
};

/// Minimal dy >= 0 with dy = max(P dy - v, 0), i.e. v + R dy >= 0 and
/// (v + R dy)_i * dy_i = 0. Monotone iteration from dy = 0; returns the
/// iteration count. Throws NoConvergence when max_iters is reached.
int solve_step_complementarity(const ReflectionSpec& spec, std::span<const double> v,
                               std::span<double> dy, const ToleranceConfig& tol);

/// Global fixed point y_i(t_k) = max_{m<=k} [((P y)_i(t_m) - x_i(t_m)) v 0],
/// iterated from y = 0. Iterates increase monotonically to the solution.
ReflectionSolution skorohod_fixed_point(const GridPath& x, const ReflectionSpec& spec,
                                        const ToleranceConfig& tol = {},
                                        SolverStats* stats = nullptr);

/// Step-by-step complementarity: at step k, dy solves the linear
/// complementarity problem for z(t_{k-1}) + dx. O(K) outer steps.
ReflectionSolution skorohod_per_step(const GridPath& x, const ReflectionSpec& spec,
                                     const ToleranceConfig& tol = {});

/// Closed form for J = 1: y(t_k) = max(max_{m<=k} -x(t_m), 0), z = x + y.
ReflectionSolution one_dim_reflection_oracle(const GridPath& x);

}  // namespace skosens
