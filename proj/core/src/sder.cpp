#include "skosens/sder.hpp"

#include <cmath>
#include <string>

#include "skosens/error.hpp"
#include "skosens/noise.hpp"

namespace skosens {

DiffusionModel::DiffusionModel(ReflectionSpec spec, Eigen::VectorXd theta0,
                               Eigen::MatrixXd Theta, Eigen::MatrixXd sigma)
    : spec_(std::move(spec)), theta0_(std::move(theta0)), Theta_(std::move(Theta)),
      sigma_(std::move(sigma)) {
  const int J = spec_.dim();
  if (theta0_.size() != J || Theta_.rows() != J || Theta_.cols() != J || sigma_.rows() != J ||
      sigma_.cols() < 1) {
    throw Error(ErrorCode::kShapeMismatch,
                "DiffusionModel: theta0 must be J, Theta J x J and sigma J x d");
  }
  if (!theta0_.allFinite() || !Theta_.allFinite() || !sigma_.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "DiffusionModel: non-finite coefficient");
  }
  Sigma_ = sigma_ * sigma_.transpose();
}

DiffusionModel::DiffusionModel(ReflectionSpec spec, Eigen::VectorXd theta0,
                               Eigen::MatrixXd sigma)
    : DiffusionModel(spec, std::move(theta0), Eigen::MatrixXd::Zero(spec.dim(), spec.dim()),
                     std::move(sigma)) {}

DiffusionModel DiffusionModel::with_theta0(Eigen::VectorXd theta0) const {
  return DiffusionModel(spec_, std::move(theta0), Theta_, sigma_);
}

void SimConfig::validate() const {
  tol.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::kInvalidArgument, "sim: dt must be positive");
  if (!(horizon > burn_in) || !(burn_in >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "sim: need horizon > burn_in >= 0");
  }
  if (!(stride >= dt * (1.0 - 1e-12))) throw Error(ErrorCode::kInvalidArgument, "sim: stride must be >= dt");
  if (horizon / dt > 4e9) throw Error(ErrorCode::kInvalidArgument, "sim: too many steps");
}

std::size_t SimConfig::num_steps() const {
  return static_cast<std::size_t>(std::llround(horizon / dt));
}
std::size_t SimConfig::burn_in_steps() const {
  return static_cast<std::size_t>(std::llround(burn_in / dt));
}
std::size_t SimConfig::stride_steps() const {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(stride / dt)));
}

void simulate_streaming(const DiffusionModel& model, const Eigen::VectorXd& z0,
                        const Eigen::MatrixXd& a0, const SimConfig& config,
                        std::uint32_t path_id, StepObserver& observer) {
  config.validate();
  const int J = model.dim();
  const int d = model.noise_dim();
  const auto& spec = model.spec();
  const auto& tol = config.tol;
  if (z0.size() != J || a0.rows() != J || a0.cols() != J) {
    throw Error(ErrorCode::kShapeMismatch, "simulate: z0 must be J and a0 J x J");
  }
  if (!z0.allFinite() || z0.minCoeff() < 0.0) {
    throw Error(ErrorCode::kInvalidInitialCondition, "simulate: z0 must be nonnegative");
  }
  if (!a0.allFinite() || a0.minCoeff() < 0.0) {
    throw Error(ErrorCode::kInvalidInitialCondition, "simulate: a0 must be nonnegative");
  }

  const double dt = config.dt;
  const double sqrt_dt = std::sqrt(dt);
  const std::size_t K = config.num_steps();
  const bool bridge = config.scheme == ReflectionScheme::kBridge;
  const NoiseStream noise(config.seed, path_id);
  const auto& sigma = model.sigma();
  const auto& Sigma = model.covariance();
  const auto& theta0 = model.theta0();
  const auto& Theta = model.Theta();
  const bool constant_drift = model.constant_drift();
  const auto& R = spec.R();

  Eigen::VectorXd x = z0, z = z0, y = Eigen::VectorXd::Zero(J), dy = Eigen::VectorXd::Zero(J);
  Eigen::VectorXd dw = Eigen::VectorXd::Zero(d), u = Eigen::VectorXd::Zero(J);
  Eigen::VectorXd dx(J), w1(J), v(J), running = z0.cwiseAbs();
  Eigen::MatrixXd chi = a0, chi_prev = a0, a(J, J), a_before(J, J);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(J, J);

  IndexSet active;
  for (int i = 0; i < J; ++i) {
    if (z(i) <= tol.zero_threshold(running(i))) {
      active.insert(i);
      if (a0.row(i).cwiseAbs().maxCoeff() != 0.0) {
        throw Error(ErrorCode::kInvalidInitialCondition,
                    "simulate: row " + std::to_string(i + 1) +
                        " of a0 must vanish because z0 is on that face");
      }
    }
  }
  AugmentedStepper stepper(spec, tol);
  stepper.advance(chi, active, b, a);
  a_before = a;
  observer.on_step(StepView{0, 0.0, x, z, y, dy, chi, a, a_before, b, dw, u, active, false});

  for (std::size_t k = 1; k <= K; ++k) {
    noise.normals(k, {dw.data(), static_cast<std::size_t>(d)});
    dw *= sqrt_dt;
    for (int i = 0; i < J; ++i) {
      double drift = theta0(i);
      if (!constant_drift) {
        for (int l = 0; l < J; ++l) drift += Theta(i, l) * z(l);
      }
      double diffusion = 0.0;
      for (int l = 0; l < d; ++l) diffusion += sigma(i, l) * dw(l);
      dx(i) = drift * dt + diffusion;
      w1(i) = z(i) + dx(i);
    }
    if (bridge) {
      noise.uniforms(k, {u.data(), static_cast<std::size_t>(J)});
      for (int i = 0; i < J; ++i) {
        const double var = Sigma(i, i) * dt;
        // Minimum of a Brownian bridge from z_i to w1_i with variance var.
        v(i) = var > 0.0
                   ? 0.5 * (z(i) + w1(i) - std::sqrt(dx(i) * dx(i) - 2.0 * var * std::log(u(i))))
                   : std::min(z(i), w1(i));
      }
    } else {
      v = w1;
    }
    solve_step_complementarity(spec, {v.data(), static_cast<std::size_t>(J)},
                               {dy.data(), static_cast<std::size_t>(J)}, tol);

    active = IndexSet();
    for (int i = 0; i < J; ++i) {
      double zi = w1(i);
      for (int l = 0; l < J; ++l) zi += R(i, l) * dy(l);
      if (dy(i) > 0.0) {
        zi = bridge ? std::max(zi, 0.0) : 0.0;
        active.insert(i);
      }
      z(i) = zi;
      x(i) += dx(i);
      y(i) += dy(i);
      running(i) = std::max(running(i), std::abs(zi));
      if (zi <= tol.zero_threshold(running(i))) active.insert(i);
    }

    const double t = static_cast<double>(k) * dt;
    chi_prev.diagonal() = chi.diagonal();
    for (int i = 0; i < J; ++i) chi(i, i) = a0(i, i) + t;
    a_before = a;
    a_before.diagonal() += chi.diagonal() - chi_prev.diagonal();
    stepper.advance(chi, active, b, a);
    double deviation = 0.0;
    for (int i = 0; i < J; ++i) {
      for (int l = 0; l < J; ++l) deviation += std::abs(a(i, l) - a_before(i, l));
    }
    observer.on_step(StepView{k, t, x, z, y, dy, chi, a, a_before, b, dw, u, active,
                              deviation > tol.jump_threshold()});
  }
}

namespace {

class Recorder final : public StepObserver {
 public:
  Recorder(int J, int d, std::size_t K, double dt, std::uint32_t path_id) {
    auto make = [&](Eigen::Index rows, Eigen::Index cols) {
      GridPath p(0.0, dt, rows, cols, 0);
      p.reserve(K + 1);
      return p;
    };
    out.path_id = path_id;
    auto& s = out.solution;
    s.x = make(J, 1);
    s.y = make(J, 1);
    s.z = make(J, 1);
    s.chi = make(J, J);
    s.a = make(J, J);
    s.b = make(J, J);
    s.active_sets.reserve(K + 1);
    out.noise = make(d, 1);
    out.bridge_uniforms = make(J, 1);
    b_prev = Eigen::MatrixXd::Zero(J, J);
  }

  void on_step(const StepView& step) override {
    auto& s = out.solution;
    s.x.push_back(step.x);
    s.y.push_back(step.y);
    s.z.push_back(step.z);
    s.chi.push_back(step.chi);
    s.a.push_back(step.a);
    s.b.push_back(step.b);
    s.active_sets.push_back(step.active);
    out.noise.push_back(step.dw);
    out.bridge_uniforms.push_back(step.bridge_u);
    if (step.jump) {
      out.jumps.push_back(JumpEvent{step.k, step.t, step.active, step.a - step.a_before,
                                    step.b - b_prev, step.a_before});
    }
    b_prev = step.b;
  }

  SimOutput out;
  Eigen::MatrixXd b_prev;
};

}  // namespace

SimOutput simulate(const DiffusionModel& model, const Eigen::VectorXd& z0,
                   const Eigen::MatrixXd& a0, const SimConfig& config, std::uint32_t path_id) {
  config.validate();
  Recorder recorder(model.dim(), model.noise_dim(), config.num_steps(), config.dt, path_id);
  simulate_streaming(model, z0, a0, config, path_id, recorder);
  return std::move(recorder.out);
}

CoupledPair simulate_coupled_pair(const DiffusionModel& model, const Eigen::VectorXd& z0,
                                  double epsilon, int j, const SimConfig& config,
                                  std::uint32_t path_id) {
  if (!model.constant_drift()) {
    throw Error(ErrorCode::kStateDependentDriftUnsupported,
                "coupled pair needs constant drift (Theta = 0)");
  }
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
  if (j < 0 || j >= model.dim()) throw Error(ErrorCode::kInvalidArgument, "column index out of range");
  const int J = model.dim();
  const Eigen::MatrixXd a0 = Eigen::MatrixXd::Zero(J, J);
  Eigen::VectorXd theta = model.theta0();
  theta(j) -= epsilon;

  CoupledPair pair{simulate(model, z0, a0, config, path_id),
                   simulate(model.with_theta0(theta), z0, a0, config, path_id), GridPath(), 0.0};
  const auto& z = pair.base.solution.z;
  const auto& ze = pair.perturbed.solution.z;
  pair.difference_quotient = GridPath(z.t0(), z.dt(), J, 1, z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    pair.difference_quotient.vec(k) = (z.vec(k) - ze.vec(k)) / epsilon;
    const Eigen::VectorXd column = pair.base.solution.a.at(k).col(j);
    pair.sup_error = std::max(
        pair.sup_error, (pair.difference_quotient.vec(k) - column).cwiseAbs().maxCoeff());
  }
  return pair;
}

}  // namespace skosens
