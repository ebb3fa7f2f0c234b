#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "skosens/index_set.hpp"
#include "skosens/operators.hpp"
#include "skosens/sder.hpp"

namespace skosens {

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;  ///< total samples (points or events) behind the mean
  std::size_t n_batches = 0;  ///< replications used for the standard error

  /// |mean - target| / std_error; 0 when both vanish, +inf for a nonzero gap
  /// with no spread.
  double z_score(double target) const;
};

/// Mean and standard error of equally weighted batch values. Throws
/// InsufficientSamples for fewer than two batches.
Estimate batch_means(const std::vector<double>& batches);

/// Which grid points of a path enter stationary estimates.
struct PathWindow {
  std::size_t burn_in_steps = 0;
  std::size_t stride_steps = 1;
  std::size_t num_steps = 0;
  double dt = 1.0;

  static PathWindow from(const SimConfig& config);
  /// Strided sample points t_B, t_B + stride, ...
  bool is_sample(std::size_t k) const {
    return k >= burn_in_steps && (k - burn_in_steps) % stride_steps == 0;
  }
  /// Increments over (t_B, t_K] count towards per-unit-time measures.
  bool in_window(std::size_t k) const { return k > burn_in_steps; }
  double duration() const { return static_cast<double>(num_steps - burn_in_steps) * dt; }
};

using PointFunction = std::function<double(const Eigen::VectorXd& z, const Eigen::MatrixXd& a)>;
/// J-vector paired with dY in the boundary-measure sum.
using BoundaryFunction =
    std::function<Eigen::VectorXd(const Eigen::VectorXd& z, const Eigen::MatrixXd& a)>;

/// z with the coordinates in I set to zero.
Eigen::VectorXd zero_on(const Eigen::VectorXd& z, IndexSet I);

/// Average of g(Z, A) over strided sample points of one path.
class PiAccumulator final : public StepObserver {
 public:
  PiAccumulator(PathWindow window, PointFunction g) : window_(window), g_(std::move(g)) {}
  void on_step(const StepView& step) override;
  double mean() const { return n_ == 0 ? 0.0 : sum_ / static_cast<double>(n_); }
  std::size_t samples() const { return n_; }

 private:
  PathWindow window_;
  PointFunction g_;
  double sum_ = 0.0;
  std::size_t n_ = 0;
};

/// Per-unit-time sum of h(Z~, A) . dY with Z~ = Z zeroed on the active set and
/// A the value after the step.
class NuAccumulator final : public StepObserver {
 public:
  NuAccumulator(PathWindow window, BoundaryFunction h) : window_(window), h_(std::move(h)) {}
  void on_step(const StepView& step) override;
  double rate() const { return sum_ / window_.duration(); }
  std::size_t contacts() const { return n_; }

 private:
  PathWindow window_;
  BoundaryFunction h_;
  double sum_ = 0.0;
  std::size_t n_ = 0;
};

/// Per-unit-time sum over jumps with active set exactly I of g(Z~, A before).
class UIAccumulator final : public StepObserver {
 public:
  UIAccumulator(PathWindow window, IndexSet I, PointFunction g)
      : window_(window), I_(I), g_(std::move(g)) {}
  void on_step(const StepView& step) override;
  double rate() const { return sum_ / window_.duration(); }
  std::size_t events() const { return n_; }

 private:
  PathWindow window_;
  IndexSet I_;
  PointFunction g_;
  double sum_ = 0.0;
  std::size_t n_ = 0;
};

/// Keeps (Z, A) at strided sample points.
class SampleRecorder final : public StepObserver {
 public:
  explicit SampleRecorder(PathWindow window) : window_(window) {}
  void on_step(const StepView& step) override;
  std::vector<Eigen::VectorXd> z;
  std::vector<Eigen::MatrixXd> a;

 private:
  PathWindow window_;
};

/// Forwards every step to several observers in order.
class ObserverFanout final : public StepObserver {
 public:
  void add(StepObserver& o) { observers_.push_back(&o); }
  void on_step(const StepView& step) override {
    for (auto* o : observers_) o->on_step(step);
  }

 private:
  std::vector<StepObserver*> observers_;
};

/// One path's contribution to each BAR term.
struct BarTotals {
  double pi = 0.0;    ///< mean of Tf at sample points
  double nu = 0.0;    ///< per unit time
  double jump = 0.0;  ///< per unit time
  double jump_abs = 0.0;  ///< sum of |jump contributions| (not normalised)
  double second_moment = 0.0;  ///< mean of |z|_2^2 + |a|_1 at sample points
  std::size_t samples = 0;
  std::size_t contacts = 0;
  std::size_t jumps = 0;
};

/// Accumulates the three BAR terms for several term lists on one path.
class BarAccumulator final : public StepObserver {
 public:
  BarAccumulator(const DiffusionModel& model, PathWindow window, std::vector<TermList> functions);
  void on_step(const StepView& step) override;
  std::vector<BarTotals> totals() const;

 private:
  const DiffusionModel& model_;
  PathWindow window_;
  std::vector<TermList> functions_;
  std::vector<Eigen::VectorXd> grad_weights_;  // per term: R' u
  std::vector<BarTotals> acc_;
  Eigen::VectorXd zt_;
};

struct BarReport {
  Estimate term_pi;
  Estimate term_nu;
  Estimate term_jump;
  /// mean = term_pi + term_nu + term_jump; std_error from per-path residuals.
  Estimate residual;
  std::size_t n_paths = 0;
  ExpTestFunction f;
  std::optional<IndexSet> I;  ///< set for the O_I f variant
  /// O_I f variant: empirical jump term (cancelled analytically, so excluded
  /// from the residual) and the largest per-path sum of |jump contributions|.
  std::optional<Estimate> empirical_jump;
  double max_path_jump_abs = 0.0;
  Estimate second_moment;

  double z_score() const { return residual.z_score(0.0); }
};

/// Combines per-path totals (ordered by path id) into a report.
BarReport combine_bar(const std::vector<BarTotals>& per_path, const ExpTestFunction& f,
                      std::optional<IndexSet> I = std::nullopt);

/// Rebuilds the step stream of a stored path.
void replay(const SimOutput& output, StepObserver& observer, const ToleranceConfig& tol = {});

Estimate estimate_pi_integral(const std::vector<SimOutput>& outputs, const PointFunction& g,
                              const SimConfig& config);
Estimate estimate_nu(const std::vector<SimOutput>& outputs, const BoundaryFunction& h,
                     const SimConfig& config);
Estimate estimate_uI(const std::vector<SimOutput>& outputs, IndexSet I, const PointFunction& g,
                     const SimConfig& config);
BarReport bar_residual(const DiffusionModel& model, const std::vector<SimOutput>& outputs,
                       const ExpTestFunction& f, const SimConfig& config);
/// Two-term relation for O_I f; the jump term is reported separately.
BarReport bar_residual_corollary(const DiffusionModel& model,
                                 const std::vector<SimOutput>& outputs,
                                 const ExpTestFunction& f, IndexSet I, const SimConfig& config);

/// Streams n paths with A(0) = 0 through a BarAccumulator without storing
/// them. With `sets`, the i-th function is evaluated as O_{sets[i]} f_i.
std::vector<BarReport> run_bar(const DiffusionModel& model, const Eigen::VectorXd& z0,
                               const SimConfig& config, std::size_t n_paths, int workers,
                               const std::vector<ExpTestFunction>& functions,
                               const std::vector<std::optional<IndexSet>>& sets = {});

}  // namespace skosens
