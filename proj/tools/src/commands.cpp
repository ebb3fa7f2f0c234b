#include "commands.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "skosens/csv_io.hpp"
#include "skosens/error.hpp"
#include "skosens/estimators.hpp"
#include "skosens/noise.hpp"

namespace skosens::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

#ifndef SKOSENS_VERSION
#define SKOSENS_VERSION "0.0.0"
#endif

struct Context {
  ExperimentConfig config;
  fs::path out_dir;
  int workers = 1;
  std::string header;
};

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json to_json(IndexSet I) {
  json out = json::array();
  for (int i : I.indices()) out.push_back(i + 1);
  return out;
}

json to_json(const Estimate& e) {
  return {{"mean", e.mean}, {"stderr", e.std_error}, {"n_samples", e.n_samples},
          {"n_batches", e.n_batches}};
}

json to_json(const BarReport& r) {
  json j = {{"term_pi", r.term_pi.mean},
            {"term_nu", r.term_nu.mean},
            {"term_jump", r.term_jump.mean},
            {"residual", r.residual.mean},
            {"stderr", r.residual.std_error},
            {"z_score", r.z_score()},
            {"n_paths", r.n_paths},
            {"f", {{"eta", to_json(r.f.eta)}, {"alpha", to_json(r.f.alpha)}}},
            {"term_stderr",
             {{"pi", r.term_pi.std_error}, {"nu", r.term_nu.std_error},
              {"jump", r.term_jump.std_error}}},
            {"second_moment", to_json(r.second_moment)}};
  if (r.I) j["I"] = to_json(*r.I);
  if (r.empirical_jump) {
    j["empirical_jump"] = to_json(*r.empirical_jump);
    j["max_path_jump_abs"] = r.max_path_jump_abs;
  }
  return j;
}

std::string set_label(IndexSet I) {
  std::string s;
  for (int i : I.indices()) s += (s.empty() ? "" : " ") + std::to_string(i + 1);
  return "{" + s + "}";
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + file.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + file.string());
}

void write_report(const Context& ctx, json body) {
  json doc = {{"header", ctx.header}, {"kind", to_string(ctx.config.kind)}};
  doc.update(body);
  write_text(ctx.out_dir / "report.json", doc.dump(2) + "\n");
}

std::string padded(std::size_t r) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03zu", r);
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// --- validate ----------------------------------------------------------------

int run_validate(const Context& ctx) {
  const auto& c = ctx.config;
  const auto spec = validate_reflection_matrices(c.P, c.P_tilde);
  json body = {{"dim", spec.dim()},
               {"P", to_json(spec.P())},
               {"P_tilde", to_json(spec.P_tilde())},
               {"R", to_json(spec.R())},
               {"R_tilde", to_json(spec.R_tilde())},
               {"weights", to_json(spec.weights())},
               {"eta", spec.eta()},
               {"spectral_radius_P", spec.spectral_radius_P()},
               {"spectral_radius_P_tilde", spec.spectral_radius_P_tilde()},
               {"tilde_equals_plain", spec.tilde_equals_plain()}};
  if (c.sigma.size() > 0) {
    const auto model = c.model();
    body["theta0"] = to_json(model.theta0());
    body["Theta"] = to_json(model.Theta());
    body["sigma"] = to_json(model.sigma());
    body["covariance"] = to_json(model.covariance());
  }
  write_report(ctx, body);
  return kExitOk;
}

// --- simulate ----------------------------------------------------------------

int run_simulate(const Context& ctx) {
  const auto& c = ctx.config;
  const auto model = c.model();
  const int J = model.dim();
  const auto outputs = run_replications(c.replications, ctx.workers, [&](std::uint32_t id) {
    return simulate(model, c.z0, c.a0, c.sim, id);
  });
  const std::string comment = ctx.header;
  json reps = json::array();
  for (std::size_t r = 0; r < outputs.size(); ++r) {
    const auto& s = outputs[r].solution;
    const std::string tag = "_r" + padded(r) + ".csv";
    write_path_csv(ctx.out_dir / ("z" + tag), s.z, comment);
    write_path_csv(ctx.out_dir / ("y" + tag), s.y, comment);
    write_path_csv(ctx.out_dir / ("a" + tag), s.a, comment);
    write_path_csv(ctx.out_dir / ("b" + tag), s.b, comment);
    write_jumps_csv(ctx.out_dir / ("jumps" + tag), outputs[r].jumps, J, comment);
    Eigen::VectorXd mean_z = Eigen::VectorXd::Zero(J);
    for (std::size_t k = 0; k < s.z.size(); ++k) mean_z += s.z.vec(k);
    mean_z /= static_cast<double>(s.z.size());
    const std::size_t last = s.z.steps();
    reps.push_back({{"path_id", r},
                    {"num_steps", last},
                    {"jumps", outputs[r].jumps.size()},
                    {"time_average_z", to_json(mean_z)},
                    {"final_z", to_json(Eigen::VectorXd(s.z.vec(last)))},
                    {"final_y", to_json(Eigen::VectorXd(s.y.vec(last)))},
                    {"final_a", to_json(Eigen::MatrixXd(s.a.at(last)))}});
  }
  write_report(ctx, {{"dim", J}, {"replications", c.replications}, {"paths", reps}});
  return kExitOk;
}

// --- derivative-check --------------------------------------------------------

GridPath free_path(const DiffusionModel& model, const Eigen::VectorXd& z0, const SimConfig& sim,
                   std::uint32_t id) {
  const NoiseStream noise(sim.seed, id);
  const std::size_t K = sim.num_steps();
  const int d = model.noise_dim();
  GridPath x(0.0, sim.dt, model.dim(), 1, K + 1);
  x.vec(0) = z0;
  Eigen::VectorXd dw(d);
  const double sq = std::sqrt(sim.dt);
  for (std::size_t k = 1; k <= K; ++k) {
    noise.normals(k, std::span<double>(dw.data(), static_cast<std::size_t>(d)));
    x.vec(k) = x.vec(k - 1) + model.theta0() * sim.dt + model.sigma() * (dw * sq);
  }
  return x;
}

int run_derivative_check(const Context& ctx, std::ostream& out) {
  const auto& c = ctx.config;
  const auto model = c.model();
  if (!model.constant_drift()) {
    throw Error(ErrorCode::kStateDependentDriftUnsupported,
                "derivative-check needs constant drift (model.Theta = 0)");
  }
  if (!model.spec().tilde_equals_plain()) {
    throw Error(ErrorCode::kInvalidArgument, "derivative-check needs model.P_tilde = model.P");
  }
  std::vector<int> columns = c.columns;
  if (columns.empty()) {
    for (int j = 0; j < model.dim(); ++j) columns.push_back(j);
  }
  const std::size_t E = c.epsilons.size();
  // per path: sup and mean error for each epsilon
  const auto per_path = run_replications(c.replications, ctx.workers, [&](std::uint32_t id) {
    const auto x = free_path(model, c.z0, c.sim, id);
    const auto sol = derivative_process(x, model.spec(), c.sim.tol);
    std::vector<std::pair<double, double>> err(E, {0.0, 0.0});
    for (int j : columns) {
      for (std::size_t e = 0; e < E; ++e) {
        const auto fd = finite_difference_derivative(x, model.spec(), c.epsilons[e], j, c.sim.tol);
        for (std::size_t k = 0; k < x.size(); ++k) {
          const double d = (fd.vec(k) - sol.a.at(k).col(j)).cwiseAbs().maxCoeff();
          err[e].first = std::max(err[e].first, d);
          err[e].second += d;
        }
      }
    }
    const double points = static_cast<double>(x.size() * columns.size());
    for (auto& e : err) e.second /= points;
    return err;
  });
  std::vector<double> sup(E, 0.0), mean(E, 0.0);
  for (const auto& p : per_path) {
    for (std::size_t e = 0; e < E; ++e) {
      sup[e] = std::max(sup[e], p[e].first);
      mean[e] += p[e].second / static_cast<double>(per_path.size());
    }
  }
  bool monotone = true;
  for (std::size_t e = 1; e < E; ++e) monotone = monotone && sup[e] < sup[e - 1];

  std::ostringstream csv;
  csv << "# " << ctx.header << "\n" << "epsilon,sup_error,mean_error\n";
  json rows = json::array();
  for (std::size_t e = 0; e < E; ++e) {
    csv << num(c.epsilons[e]) << ',' << num(sup[e]) << ',' << num(mean[e]) << '\n';
    rows.push_back({{"epsilon", c.epsilons[e]}, {"sup_error", sup[e]}, {"mean_error", mean[e]}});
    char line[96];
    std::snprintf(line, sizeof line, "eps=%-10.3g sup_error=%-12.6g mean_error=%.6g\n",
                  c.epsilons[e], sup[e], mean[e]);
    out << line;
  }
  write_text(ctx.out_dir / "derivative_check.csv", csv.str());
  json cols = json::array();
  for (int j : columns) cols.push_back(j + 1);
  write_report(ctx, {{"paths", c.replications}, {"columns", cols}, {"table", rows},
                     {"monotone", monotone}});
  out << (monotone ? "sup error strictly decreasing\n" : "sup error NOT strictly decreasing\n");
  return kExitOk;
}

// --- bar ---------------------------------------------------------------------

int run_bar_kind(const Context& ctx, std::ostream& out) {
  const auto& c = ctx.config;
  const auto model = c.model();
  std::vector<ExpTestFunction> functions;
  std::vector<std::optional<IndexSet>> sets;
  for (const auto& f : c.test_functions) {
    functions.push_back(f);
    sets.emplace_back();
  }
  for (const auto& I : c.sets_I) {
    for (const auto& f : c.test_functions) {
      functions.push_back(f);
      sets.emplace_back(I);
    }
  }
  const auto reports =
      skosens::run_bar(model, c.z0, c.sim, c.replications, ctx.workers, functions, sets);
  std::ostringstream csv;
  csv << "# " << ctx.header << "\n"
      << "function,I,term_pi,term_nu,term_jump,residual,stderr,z_score\n";
  json rows = json::array();
  bool pass = true;
  const std::size_t n_f = c.test_functions.size();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    const double z = r.z_score();
    pass = pass && z <= kZThreshold;
    const std::string label = r.I ? set_label(*r.I) : "none";
    csv << (i % n_f) + 1 << ',' << label << ',' << num(r.term_pi.mean) << ','
        << num(r.term_nu.mean) << ',' << num(r.term_jump.mean) << ',' << num(r.residual.mean)
        << ',' << num(r.residual.std_error) << ',' << num(z) << '\n';
    json row = to_json(r);
    row["function"] = (i % n_f) + 1;
    rows.push_back(row);
    char line[160];
    std::snprintf(line, sizeof line, "f%-3zu I=%-8s residual=%-12.4g stderr=%-10.4g z=%.3f\n",
                  (i % n_f) + 1, label.c_str(), r.residual.mean, r.residual.std_error, z);
    out << line;
  }
  write_text(ctx.out_dir / "bar.csv", csv.str());
  write_report(ctx, {{"z_threshold", kZThreshold}, {"pass", pass}, {"reports", rows}});
  return pass ? kExitOk : kExitThreshold;
}

// --- laplace-check -----------------------------------------------------------

int run_laplace_check(const Context& ctx, std::ostream& out) {
  const auto& c = ctx.config;
  const auto model = c.model();
  if (!model.constant_drift()) {
    throw Error(ErrorCode::kStateDependentDriftUnsupported,
                "laplace-check needs constant drift (model.Theta = 0)");
  }
  const double theta = model.theta0()(0);
  const double sigma2 = model.covariance()(0, 0);
  std::vector<std::pair<double, double>> grid;
  for (double alpha : c.laplace_alphas) {
    for (double eta : c.laplace_etas) grid.emplace_back(alpha, eta);
  }
  // closed forms first: they reject theta >= 0 before any simulation
  std::vector<double> exact;
  for (const auto& [alpha, eta] : grid) exact.push_back(laplace_1d(alpha, eta, theta, sigma2));

  const PathWindow window = PathWindow::from(c.sim);
  const Eigen::MatrixXd a0 = Eigen::MatrixXd::Zero(1, 1);
  const auto per_path = run_replications(c.replications, ctx.workers, [&](std::uint32_t id) {
    std::vector<PiAccumulator> acc;
    acc.reserve(grid.size());
    ObserverFanout fan;
    for (const auto& [alpha, eta] : grid) {
      acc.emplace_back(window, [alpha = alpha, eta = eta](const Eigen::VectorXd& z,
                                                          const Eigen::MatrixXd& a) {
        return std::exp(-alpha * z(0) - eta * a(0, 0));
      });
    }
    for (auto& a : acc) fan.add(a);
    simulate_streaming(model, c.z0, a0, c.sim, id, fan);
    std::vector<double> means;
    for (const auto& a : acc) means.push_back(a.mean());
    return means;
  });

  std::ostringstream csv;
  csv << "# " << ctx.header << "\n" << "alpha,eta,simulated,stderr,closed_form,z_score\n";
  json rows = json::array();
  bool pass = true;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<double> batches;
    for (const auto& p : per_path) batches.push_back(p[g]);
    const Estimate e = batch_means(batches);
    const double z = e.z_score(exact[g]);
    pass = pass && z <= kZThreshold;
    const auto [alpha, eta] = grid[g];
    csv << num(alpha) << ',' << num(eta) << ',' << num(e.mean) << ',' << num(e.std_error) << ','
        << num(exact[g]) << ',' << num(z) << '\n';
    rows.push_back({{"alpha", alpha}, {"eta", eta}, {"simulated", e.mean},
                    {"stderr", e.std_error}, {"closed_form", exact[g]}, {"z_score", z}});
    char line[160];
    std::snprintf(line, sizeof line,
                  "alpha=%-5g eta=%-5g simulated=%.6f stderr=%.2e closed_form=%.6f z=%.3f\n",
                  alpha, eta, e.mean, e.std_error, exact[g], z);
    out << line;
  }
  write_text(ctx.out_dir / "laplace_check.csv", csv.str());
  write_report(ctx, {{"theta", theta}, {"sigma2", sigma2}, {"replications", c.replications},
                     {"z_threshold", kZThreshold}, {"pass", pass}, {"table", rows}});
  return pass ? kExitOk : kExitThreshold;
}

std::uint64_t parse_seed(const std::string& text, const std::string& source) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw Error(ErrorCode::kConfigError, source + ": '" + text + "' is not a nonnegative integer");
  }
  return v;
}

void report_error(std::ostream& err, std::string_view code, const std::string& message) {
  err << json{{"error", std::string(code)}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run(Kind kind, const RunOptions& options, std::ostream& out, std::ostream& err) {
  try {
    std::ifstream in(options.config, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIoError, "cannot read config " + options.config.string());
    std::stringstream text;
    text << in.rdbuf();

    Context ctx;
    ctx.config = load_config(text.str(), kind);
    if (options.seed) {
      ctx.config.sim.seed = *options.seed;
    } else if (options.env_seed) {
      ctx.config.sim.seed = parse_seed(*options.env_seed, "SKOSENS_SEED");
    }
    ctx.workers = std::max(1, options.workers);
    ctx.out_dir = options.out ? *options.out : ctx.config.output_dir;
    char header[128];
    std::snprintf(header, sizeof header, "skosens %s seed=%" PRIu64 " config_hash=%016" PRIx64,
                  SKOSENS_VERSION, ctx.config.sim.seed, ctx.config.config_hash);
    ctx.header = header;

    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    if (ec) throw Error(ErrorCode::kIoError, "cannot create " + ctx.out_dir.string());

    switch (kind) {
      case Kind::kValidate: return run_validate(ctx);
      case Kind::kSimulate: return run_simulate(ctx);
      case Kind::kDerivativeCheck: return run_derivative_check(ctx, out);
      case Kind::kBar: return run_bar_kind(ctx, out);
      case Kind::kLaplaceCheck: return run_laplace_check(ctx, out);
    }
    return kExitInvalid;
  } catch (const Error& e) {
    report_error(err, to_string(e.code()), e.what());
    return e.code() == ErrorCode::kIoError ? kExitIo : kExitInvalid;
  } catch (const std::exception& e) {
    report_error(err, "InternalError", e.what());
    return kExitInvalid;
  }
}

}  // namespace skosens::cli
