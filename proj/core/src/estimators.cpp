#include "skosens/estimators.hpp"

#include <cmath>
#include <limits>

#include "skosens/error.hpp"

namespace skosens {

double Estimate::z_score(double target) const {
  const double gap = std::abs(mean - target);
  if (std_error > 0.0) return gap / std_error;
  return gap == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

Estimate batch_means(const std::vector<double>& batches) {
  const std::size_t n = batches.size();
  if (n < 2) throw Error(ErrorCode::kInsufficientSamples, "batch means need at least 2 batches");
  double mean = 0.0;
  for (double b : batches) mean += b;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double b : batches) ss += (b - mean) * (b - mean);
  const double var = ss / static_cast<double>(n - 1);
  return Estimate{mean, std::sqrt(var / static_cast<double>(n)), n, n};
}

PathWindow PathWindow::from(const SimConfig& config) {
  config.validate();
  return PathWindow{config.burn_in_steps(), config.stride_steps(), config.num_steps(), config.dt};
}

Eigen::VectorXd zero_on(const Eigen::VectorXd& z, IndexSet I) {
  Eigen::VectorXd out = z;
  for (int i : I.indices()) out(i) = 0.0;
  return out;
}

namespace {
bool any_positive(const Eigen::VectorXd& v) { return (v.array() > 0.0).any(); }
}  // namespace

void PiAccumulator::on_step(const StepView& step) {
  if (!window_.is_sample(step.k)) return;
  sum_ += g_(step.z, step.a);
  ++n_;
}

void NuAccumulator::on_step(const StepView& step) {
  if (!window_.in_window(step.k) || !any_positive(step.dy)) return;
  const Eigen::VectorXd h = h_(zero_on(step.z, step.active), step.a);
  sum_ += h.dot(step.dy);
  ++n_;
}

void UIAccumulator::on_step(const StepView& step) {
  if (!window_.in_window(step.k) || !step.jump || !(step.active == I_)) return;
  sum_ += g_(zero_on(step.z, step.active), step.a_before);
  ++n_;
}

void SampleRecorder::on_step(const StepView& step) {
  if (!window_.is_sample(step.k)) return;
  z.push_back(step.z);
  a.push_back(step.a);
}

BarAccumulator::BarAccumulator(const DiffusionModel& model, PathWindow window,
                               std::vector<TermList> functions)
    : model_(model), window_(window), functions_(std::move(functions)),
      acc_(functions_.size()), zt_(model.dim()) {
  for (const auto& terms : functions_) {
    for (const auto& t : terms) grad_weights_.push_back(model.spec().R().transpose() * t.z_weights);
  }
}

void BarAccumulator::on_step(const StepView& step) {
  if (window_.is_sample(step.k)) {
    const double m = step.z.squaredNorm() + step.a.cwiseAbs().sum();
    for (std::size_t f = 0; f < functions_.size(); ++f) {
      acc_[f].pi += apply_T(functions_[f], model_, step.z, step.a);
      acc_[f].second_moment += m;
      ++acc_[f].samples;
    }
  }
  if (!window_.in_window(step.k)) return;
  const bool contact = any_positive(step.dy);
  if (!contact && !step.jump) return;
  zt_ = step.z;
  for (int i : step.active.indices()) zt_(i) = 0.0;
  std::size_t g = 0;
  for (std::size_t f = 0; f < functions_.size(); ++f) {
    auto& acc = acc_[f];
    double jump = 0.0;
    for (const auto& t : functions_[f]) {
      const double after = t(zt_, step.a);
      if (contact) acc.nu -= after * grad_weights_[g].dot(step.dy);
      if (step.jump) jump += after - t(zt_, step.a_before);
      ++g;
    }
    if (contact) ++acc.contacts;
    if (step.jump) {
      acc.jump += jump;
      acc.jump_abs += std::abs(jump);
      ++acc.jumps;
    }
  }
}

std::vector<BarTotals> BarAccumulator::totals() const {
  std::vector<BarTotals> out = acc_;
  const double T = window_.duration();
  for (auto& t : out) {
    if (t.samples > 0) {
      t.pi /= static_cast<double>(t.samples);
      t.second_moment /= static_cast<double>(t.samples);
    }
    t.nu /= T;
    t.jump /= T;
  }
  return out;
}

BarReport combine_bar(const std::vector<BarTotals>& per_path, const ExpTestFunction& f,
                      std::optional<IndexSet> I) {
  const std::size_t n = per_path.size();
  std::vector<double> pi(n), nu(n), jump(n), residual(n), moment(n);
  BarReport report;
  report.n_paths = n;
  report.f = f;
  report.I = I;
  std::size_t samples = 0, contacts = 0, jumps = 0;
  for (std::size_t p = 0; p < n; ++p) {
    const auto& t = per_path[p];
    pi[p] = t.pi;
    nu[p] = t.nu;
    jump[p] = t.jump;
    moment[p] = t.second_moment;
    residual[p] = t.pi + t.nu + (I ? 0.0 : t.jump);
    samples += t.samples;
    contacts += t.contacts;
    jumps += t.jumps;
    report.max_path_jump_abs = std::max(report.max_path_jump_abs, t.jump_abs);
  }
  report.term_pi = batch_means(pi);
  report.term_pi.n_samples = samples;
  report.term_nu = batch_means(nu);
  report.term_nu.n_samples = contacts;
  report.second_moment = batch_means(moment);
  Estimate empirical_jump = batch_means(jump);
  empirical_jump.n_samples = jumps;
  if (I) {
    report.empirical_jump = empirical_jump;
    report.term_jump = Estimate{0.0, 0.0, jumps, n};
  } else {
    report.term_jump = empirical_jump;
  }
  report.residual = batch_means(residual);
  report.residual.mean = report.term_pi.mean + report.term_nu.mean + report.term_jump.mean;
  report.residual.n_samples = samples;
  return report;
}

void replay(const SimOutput& output, StepObserver& observer, const ToleranceConfig& tol) {
  const auto& s = output.solution;
  const std::size_t n = s.z.size();
  if (n == 0) return;
  const Eigen::Index J = s.z.rows();
  Eigen::VectorXd x(J), z(J), y(J), dy = Eigen::VectorXd::Zero(J), dw(output.noise.rows()),
      u(J);
  Eigen::MatrixXd chi(J, J), a(J, J), a_before(J, J), b(J, J);
  for (std::size_t k = 0; k < n; ++k) {
    x = s.x.vec(k);
    z = s.z.vec(k);
    y = s.y.vec(k);
    chi = s.chi.at(k);
    a = s.a.at(k);
    b = s.b.at(k);
    dw = output.noise.vec(k);
    u = output.bridge_uniforms.vec(k);
    bool jump = false;
    if (k == 0) {
      dy.setZero();
      a_before = a;
    } else {
      dy = y - s.y.vec(k - 1);
      a_before = s.a.at(k - 1) + (chi - s.chi.at(k - 1));
      jump = (a - a_before).cwiseAbs().sum() > tol.jump_threshold();
    }
    observer.on_step(StepView{k, s.z.time(k), x, z, y, dy, chi, a, a_before, b, dw, u,
                              s.active_sets[k], jump});
  }
}

namespace {

void require_paths(const std::vector<SimOutput>& outputs) {
  if (outputs.size() < 2) {
    throw Error(ErrorCode::kInsufficientSamples, "need at least 2 replications");
  }
}

}  // namespace

Estimate estimate_pi_integral(const std::vector<SimOutput>& outputs, const PointFunction& g,
                              const SimConfig& config) {
  require_paths(outputs);
  const auto window = PathWindow::from(config);
  std::vector<double> per_path;
  std::size_t samples = 0;
  for (const auto& o : outputs) {
    PiAccumulator acc(window, g);
    replay(o, acc, config.tol);
    if (acc.samples() == 0) throw Error(ErrorCode::kInsufficientSamples, "no sample points after burn-in");
    per_path.push_back(acc.mean());
    samples += acc.samples();
  }
  Estimate e = batch_means(per_path);
  e.n_samples = samples;
  return e;
}

Estimate estimate_nu(const std::vector<SimOutput>& outputs, const BoundaryFunction& h,
                     const SimConfig& config) {
  require_paths(outputs);
  const auto window = PathWindow::from(config);
  std::vector<double> per_path;
  std::size_t contacts = 0;
  for (const auto& o : outputs) {
    NuAccumulator acc(window, h);
    replay(o, acc, config.tol);
    per_path.push_back(acc.rate());
    contacts += acc.contacts();
  }
  Estimate e = batch_means(per_path);
  e.n_samples = contacts;
  return e;
}

Estimate estimate_uI(const std::vector<SimOutput>& outputs, IndexSet I, const PointFunction& g,
                     const SimConfig& config) {
  require_paths(outputs);
  if (I.empty()) throw Error(ErrorCode::kInvalidArgument, "u_I needs a nonempty I");
  const auto window = PathWindow::from(config);
  std::vector<double> per_path;
  std::size_t events = 0;
  for (const auto& o : outputs) {
    UIAccumulator acc(window, I, g);
    replay(o, acc, config.tol);
    per_path.push_back(acc.rate());
    events += acc.events();
  }
  Estimate e = batch_means(per_path);
  e.n_samples = events;
  return e;
}

namespace {

BarReport bar_from_outputs(const DiffusionModel& model, const std::vector<SimOutput>& outputs,
                           const ExpTestFunction& f, std::optional<IndexSet> I,
                           const SimConfig& config) {
  require_paths(outputs);
  f.validate(model.dim());
  const auto window = PathWindow::from(config);
  TermList terms = I ? expand_O_I(f, *I, model.spec()) : as_terms(f);
  std::vector<BarTotals> per_path;
  for (const auto& o : outputs) {
    BarAccumulator acc(model, window, {terms});
    replay(o, acc, config.tol);
    per_path.push_back(acc.totals().front());
  }
  return combine_bar(per_path, f, I);
}

}  // namespace

BarReport bar_residual(const DiffusionModel& model, const std::vector<SimOutput>& outputs,
                       const ExpTestFunction& f, const SimConfig& config) {
  return bar_from_outputs(model, outputs, f, std::nullopt, config);
}

BarReport bar_residual_corollary(const DiffusionModel& model,
                                 const std::vector<SimOutput>& outputs,
                                 const ExpTestFunction& f, IndexSet I, const SimConfig& config) {
  return bar_from_outputs(model, outputs, f, I, config);
}

std::vector<BarReport> run_bar(const DiffusionModel& model, const Eigen::VectorXd& z0,
                               const SimConfig& config, std::size_t n_paths, int workers,
                               const std::vector<ExpTestFunction>& functions,
                               const std::vector<std::optional<IndexSet>>& sets) {
  if (n_paths < 2) throw Error(ErrorCode::kInsufficientSamples, "need at least 2 replications");
  if (!sets.empty() && sets.size() != functions.size()) {
    throw Error(ErrorCode::kShapeMismatch, "run_bar: one index set per test function");
  }
  const auto window = PathWindow::from(config);
  std::vector<TermList> lists;
  for (std::size_t i = 0; i < functions.size(); ++i) {
    functions[i].validate(model.dim());
    const bool corollary = !sets.empty() && sets[i].has_value();
    lists.push_back(corollary ? expand_O_I(functions[i], *sets[i], model.spec())
                              : as_terms(functions[i]));
  }
  const Eigen::MatrixXd a0 = Eigen::MatrixXd::Zero(model.dim(), model.dim());
  auto per_path = run_replications(n_paths, workers, [&](std::uint32_t id) {
    BarAccumulator acc(model, window, lists);
    simulate_streaming(model, z0, a0, config, id, acc);
    return acc.totals();
  });
  std::vector<BarReport> reports;
  for (std::size_t i = 0; i < functions.size(); ++i) {
    std::vector<BarTotals> column;
    column.reserve(n_paths);
    for (const auto& p : per_path) column.push_back(p[i]);
    reports.push_back(combine_bar(column, functions[i], sets.empty() ? std::nullopt : sets[i]));
  }
  return reports;
}

}  // namespace skosens
