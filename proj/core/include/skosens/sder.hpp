#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "skosens/augmented.hpp"
#include "skosens/grid_path.hpp"
#include "skosens/reflection.hpp"

namespace skosens {

/// Reflected diffusion dZ = theta(Z) dt + sigma dW + R dY with affine drift
/// theta(z) = theta0 + Theta z and constant sigma (J x d).
class DiffusionModel {
 public:
  DiffusionModel(ReflectionSpec spec, Eigen::VectorXd theta0, Eigen::MatrixXd Theta,
                 Eigen::MatrixXd sigma);
  /// Constant-drift shorthand (Theta = 0).
  DiffusionModel(ReflectionSpec spec, Eigen::VectorXd theta0, Eigen::MatrixXd sigma);

  int dim() const { return spec_.dim(); }
  int noise_dim() const { return static_cast<int>(sigma_.cols()); }
  const ReflectionSpec& spec() const { return spec_; }
  const Eigen::VectorXd& theta0() const { return theta0_; }
  const Eigen::MatrixXd& Theta() const { return Theta_; }
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  /// Sigma = sigma sigma'.
  const Eigen::MatrixXd& covariance() const { return Sigma_; }
  bool constant_drift() const { return Theta_.isZero(0.0); }

  Eigen::VectorXd drift(const Eigen::Ref<const Eigen::VectorXd>& z) const {
    return theta0_ + Theta_ * z;
  }
  /// Same model with theta0 replaced.
  DiffusionModel with_theta0(Eigen::VectorXd theta0) const;

 private:
  ReflectionSpec spec_;
  Eigen::VectorXd theta0_;
  Eigen::MatrixXd Theta_;
  Eigen::MatrixXd sigma_;
  Eigen::MatrixXd Sigma_;
};

enum class ReflectionScheme {
  /// Complementarity problem on the free endpoint z(t_{k-1}) + dX. Exact discrete
  /// complementarity, O(sqrt(dt)) bias in the stationary law.
  kProjected,
  /// Complementarity problem on each coordinate's sampled Brownian-bridge
  /// minimum over the step. Exact at grid points for J = 1 and P = 0.
  kBridge,
};

struct SimConfig {
  double dt = 1e-3;
  double horizon = 1.0;
  std::uint64_t seed = 1;
  double burn_in = 100.0;
  double stride = 1.0;
  ReflectionScheme scheme = ReflectionScheme::kBridge;
  ToleranceConfig tol;

  void validate() const;
  std::size_t num_steps() const;
  std::size_t burn_in_steps() const;
  std::size_t stride_steps() const;
};

/// Everything the simulator knows at grid point k, handed to observers.
struct StepView {
  std::size_t k;
  double t;
  const Eigen::VectorXd& x;         ///< free path X(t_k)
  const Eigen::VectorXd& z;         ///< Z(t_k)
  const Eigen::VectorXd& y;         ///< Y(t_k)
  const Eigen::VectorXd& dy;        ///< Y(t_k) - Y(t_{k-1})
  const Eigen::MatrixXd& chi;       ///< A(0) + (t_k - t0) E
  const Eigen::MatrixXd& a;         ///< A(t_k)
  const Eigen::MatrixXd& a_before;  ///< A(t_{k-1}) + chi increment
  const Eigen::MatrixXd& b;         ///< B(t_k)
  const Eigen::VectorXd& dw;        ///< Brownian increment over the step
  const Eigen::VectorXd& bridge_u;  ///< bridge-minimum uniforms (zeros if projected)
  IndexSet active;
  bool jump;
};

class StepObserver {
 public:
  virtual ~StepObserver() = default;
  /// Called for k = 0 (initial state, no increments) and each step k >= 1.
  virtual void on_step(const StepView& step) = 0;
};

struct SimOutput {
  AugmentedSolution solution;
  GridPath noise;            ///< Brownian increments dW_k (d x 1), zero at k = 0
  GridPath bridge_uniforms;  ///< J x 1 per step, zero for the projected scheme
  std::vector<JumpEvent> jumps;
  std::uint32_t path_id = 0;
};

/// Runs one path and streams every grid point to `observer` without storing it.
void simulate_streaming(const DiffusionModel& model, const Eigen::VectorXd& z0,
                        const Eigen::MatrixXd& a0, const SimConfig& config,
                        std::uint32_t path_id, StepObserver& observer);

/// Euler free increments dX_k = theta(Z(t_{k-1})) dt + sigma dW_k, reflection by
/// the per-step complementarity solver, and (A, B) by the forward recursion
/// with chi(t) = a0 + t E. Deterministic in (model, z0, a0, config, path_id).
/// Throws InvalidInitialCondition when z0 < 0, a0 < 0, or a0 has a nonzero row
/// where z0 is on the boundary.
SimOutput simulate(const DiffusionModel& model, const Eigen::VectorXd& z0,
                   const Eigen::MatrixXd& a0, const SimConfig& config,
                   std::uint32_t path_id = 0);

struct CoupledPair {
  SimOutput base;
  SimOutput perturbed;  ///< drift theta0 - eps e_j, identical noise
  GridPath difference_quotient;  ///< (Z - Z^eps) / eps
  double sup_error = 0.0;        ///< sup_k |(Z - Z^eps)/eps - A^j|_inf
};

/// Requires constant drift (StateDependentDriftUnsupported otherwise); A(0) = 0.
CoupledPair simulate_coupled_pair(const DiffusionModel& model, const Eigen::VectorXd& z0,
                                  double epsilon, int j, const SimConfig& config,
                                  std::uint32_t path_id = 0);

/// Runs fn(path_id) for path_id = 0..n-1 on `workers` threads. Results are
/// stored by path id, so the output order never depends on scheduling.
template <typename F>
auto run_replications(std::size_t n, int workers, F&& fn)
    -> std::vector<decltype(fn(std::uint32_t{}))> {
  using Result = decltype(fn(std::uint32_t{}));
  std::vector<Result> results(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i] = fn(static_cast<std::uint32_t>(i));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const auto count = static_cast<std::size_t>(std::max(1, workers));
  std::vector<std::thread> threads;
  for (std::size_t w = 1; w < std::min(count, n); ++w) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace skosens
