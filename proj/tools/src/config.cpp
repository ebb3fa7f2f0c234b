#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "skosens/error.hpp"

namespace skosens::cli {
namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::kConfigError, msg); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& token, const std::string& context) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = first + token.size();
  if (!token.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    config_error(context + ": '" + token + "' is not a finite number");
  }
  return v;
}

std::vector<std::string> tokens(const std::string& row) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : row) {
    if (c == ' ' || c == '\t' || c == ',') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<std::string> split_rows(const std::string& text) {
  std::vector<std::string> rows;
  std::stringstream ss(text);
  std::string row;
  while (std::getline(ss, row, ';')) rows.push_back(row);
  return rows;
}

}  // namespace

KeyValueFile KeyValueFile::parse(const std::string& text) {
  KeyValueFile f;
  std::stringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) config_error("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty()) config_error("line " + std::to_string(lineno) + ": empty key");
    if (f.values_.count(key)) config_error("duplicate key '" + key + "'");
    f.values_[key] = value;
    f.order_.push_back(key);
  }
  return f;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read config " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::optional<std::string> KeyValueFile::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  used_[key] = true;
  return it->second;
}

std::string KeyValueFile::require(const std::string& key) const {
  auto v = get(key);
  if (!v) config_error("missing required key '" + key + "'");
  return *v;
}

std::vector<std::string> KeyValueFile::keys_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& k : order_) {
    if (k.rfind(prefix, 0) == 0) out.push_back(k);
  }
  return out;
}

std::vector<std::string> KeyValueFile::unused() const {
  std::vector<std::string> out;
  for (const auto& k : order_) {
    if (!used_.count(k)) out.push_back(k);
  }
  return out;
}

double KeyValueFile::number(const std::string& key, double fallback) const {
  auto v = get(key);
  return v ? to_double(trim(*v), key) : fallback;
}

std::uint64_t KeyValueFile::integer(const std::string& key, std::uint64_t fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  const std::string s = trim(*v);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size()) config_error(key + ": '" + s + "' is not a nonnegative integer");
  return out;
}

Eigen::MatrixXd parse_matrix(const std::string& text) {
  std::vector<std::vector<double>> rows;
  for (const auto& row : split_rows(text)) {
    auto t = tokens(row);
    if (t.empty()) continue;
    std::vector<double> r;
    for (const auto& tok : t) r.push_back(to_double(tok, "matrix"));
    rows.push_back(std::move(r));
  }
  if (rows.empty()) config_error("empty matrix");
  const auto cols = rows.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) config_error("matrix rows have different lengths");
    for (std::size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

Eigen::MatrixXd KeyValueFile::matrix(const std::string& key) const {
  try {
    return parse_matrix(require(key));
  } catch (const Error& e) {
    config_error(key + ": " + e.what());
  }
}

Eigen::VectorXd KeyValueFile::vector(const std::string& key) const {
  const Eigen::MatrixXd m = matrix(key);
  if (m.rows() != 1 && m.cols() != 1) config_error(key + ": expected a vector");
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

std::vector<IndexSet> parse_index_sets(const std::string& text, int dim) {
  std::vector<IndexSet> sets;
  for (const auto& row : split_rows(text)) {
    auto t = tokens(row);
    if (t.empty()) continue;
    IndexSet s;
    for (const auto& tok : t) {
      int i = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), i);
      if (ec != std::errc() || ptr != tok.data() + tok.size() || i < 1 || i > dim) {
        config_error("index set member '" + tok + "' must be in 1.." + std::to_string(dim));
      }
      s.insert(i - 1);
    }
    sets.push_back(s);
  }
  return sets;
}

std::optional<Kind> parse_kind(const std::string& name) {
  if (name == "validate") return Kind::kValidate;
  if (name == "simulate") return Kind::kSimulate;
  if (name == "derivative-check") return Kind::kDerivativeCheck;
  if (name == "bar") return Kind::kBar;
  if (name == "laplace-check") return Kind::kLaplaceCheck;
  return std::nullopt;
}

std::string to_string(Kind kind) {
  switch (kind) {
    case Kind::kValidate: return "validate";
    case Kind::kSimulate: return "simulate";
    case Kind::kDerivativeCheck: return "derivative-check";
    case Kind::kBar: return "bar";
    case Kind::kLaplaceCheck: return "laplace-check";
  }
  return "?";
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

DiffusionModel ExperimentConfig::model() const {
  return DiffusionModel(validate_reflection_matrices(P, P_tilde), theta0, Theta, sigma);
}

ExperimentConfig load_config(const std::string& text, Kind kind) {
  const auto kv = KeyValueFile::parse(text);
  ExperimentConfig c;
  c.kind = kind;
  c.config_hash = fnv1a(text);
  if (auto k = kv.get("kind")) {
    auto parsed = parse_kind(trim(*k));
    if (!parsed) config_error("unknown kind '" + *k + "'");
    if (*parsed != kind) config_error("config kind '" + *k + "' does not match subcommand '" + to_string(kind) + "'");
  }

  c.P = kv.matrix("model.P");
  const auto J = c.P.rows();
  c.P_tilde = kv.has("model.P_tilde") ? kv.matrix("model.P_tilde") : c.P;
  const bool needs_dynamics = kind != Kind::kValidate || kv.has("model.theta0") || kv.has("model.sigma");
  if (needs_dynamics) {
    c.theta0 = kv.vector("model.theta0");
    c.sigma = kv.matrix("model.sigma");
    c.Theta = kv.has("model.Theta") ? kv.matrix("model.Theta") : Eigen::MatrixXd::Zero(J, J);
  }
  c.z0 = kv.has("model.z0") ? kv.vector("model.z0") : Eigen::VectorXd::Zero(J);
  c.a0 = kv.has("model.a0") ? kv.matrix("model.a0") : Eigen::MatrixXd::Zero(J, J);

  const bool stationary = kind == Kind::kBar || kind == Kind::kLaplaceCheck;
  c.sim.dt = kv.number("sim.dt", 1e-3);
  c.sim.horizon = kv.number("sim.horizon", stationary ? 500.0 : 1.0);
  c.sim.burn_in = kv.number("sim.burn_in", stationary ? 100.0 : 0.0);
  c.sim.stride = kv.number("sim.stride", 1.0);
  c.sim.seed = kv.integer("sim.seed", 1);
  if (auto s = kv.get("sim.scheme")) {
    const auto v = trim(*s);
    if (v == "bridge") {
      c.sim.scheme = ReflectionScheme::kBridge;
    } else if (v == "projected") {
      c.sim.scheme = ReflectionScheme::kProjected;
    } else {
      config_error("sim.scheme must be 'bridge' or 'projected'");
    }
  }
  c.sim.tol.tau_zero = kv.number("tol.tau_zero", c.sim.tol.tau_zero);
  c.sim.tol.tau_fp = kv.number("tol.tau_fp", c.sim.tol.tau_fp);
  c.sim.tol.max_iters = static_cast<int>(kv.integer("tol.max_iters", static_cast<std::uint64_t>(c.sim.tol.max_iters)));
  const std::size_t default_reps = kind == Kind::kSimulate ? 1 : (kind == Kind::kDerivativeCheck ? 20 : 64);
  c.replications = kv.integer("sim.replications", default_reps);
  if (auto o = kv.get("output_dir")) c.output_dir = trim(*o);

  // test.<name>.eta / test.<name>.alpha, in order of first appearance
  std::vector<std::string> names;
  for (const auto& key : kv.keys_with_prefix("test.")) {
    const auto dot = key.rfind('.');
    const std::string name = key.substr(5, dot - 5);
    const std::string field = key.substr(dot + 1);
    if (dot <= 5 || (field != "eta" && field != "alpha")) config_error("unknown key '" + key + "'");
    if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
  }
  for (const auto& name : names) {
    const std::string base = "test." + name;
    ExpTestFunction f{kv.has(base + ".eta") ? kv.vector(base + ".eta") : Eigen::VectorXd::Zero(J),
                      kv.has(base + ".alpha") ? kv.matrix(base + ".alpha") : Eigen::MatrixXd::Zero(J, J)};
    c.test_functions.push_back(std::move(f));
  }
  if (auto s = kv.get("sets.I")) c.sets_I = parse_index_sets(*s, static_cast<int>(J));
  if (kv.has("derivative.epsilons")) {
    const auto e = kv.vector("derivative.epsilons");
    c.epsilons.assign(e.data(), e.data() + e.size());
  }
  if (kv.has("derivative.columns")) {
    for (const auto& s : parse_index_sets(kv.require("derivative.columns"), static_cast<int>(J))) {
      for (int i : s.indices()) c.columns.push_back(i);
    }
  }
  if (kv.has("laplace.alphas")) {
    const auto a = kv.vector("laplace.alphas");
    c.laplace_alphas.assign(a.data(), a.data() + a.size());
  }
  if (kv.has("laplace.etas")) {
    const auto e = kv.vector("laplace.etas");
    c.laplace_etas.assign(e.data(), e.data() + e.size());
  }

  const auto unused = kv.unused();
  if (!unused.empty()) config_error("unknown key '" + unused.front() + "'");

  // shape and domain checks before any computation
  if (c.P.rows() != c.P.cols()) throw Error(ErrorCode::kShapeMismatch, "model.P must be square");
  if (c.z0.size() != J || c.a0.rows() != J || c.a0.cols() != J) {
    throw Error(ErrorCode::kShapeMismatch, "model.z0 must have J entries and model.a0 must be J x J");
  }
  for (const auto& f : c.test_functions) f.validate(static_cast<int>(J));
  for (double e : c.epsilons) {
    if (!(e > 0.0)) config_error("derivative.epsilons must be positive");
  }
  for (double v : c.laplace_alphas) {
    if (!(v >= 0.0)) config_error("laplace.alphas must be nonnegative");
  }
  for (double v : c.laplace_etas) {
    if (!(v >= 0.0)) config_error("laplace.etas must be nonnegative");
  }
  if (kind != Kind::kValidate) {
    c.sim.validate();
    if (c.replications < 1) config_error("sim.replications must be >= 1");
  }
  if (stationary && c.replications < 2) {
    throw Error(ErrorCode::kInsufficientSamples, "stationary estimates need sim.replications >= 2");
  }
  if (kind == Kind::kBar && c.test_functions.empty()) config_error("bar needs at least one test.<name>.eta");
  if (kind == Kind::kLaplaceCheck && J != 1) {
    throw Error(ErrorCode::kDimensionMismatch, "laplace-check needs a one-dimensional model");
  }
  return c;
}

}  // namespace skosens::cli
