#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skosens/index_set.hpp"
#include "skosens/operators.hpp"
#include "skosens/sder.hpp"

namespace skosens::cli {

/// Flat `key = value` file. Keys may be dotted (`model.P`), values may be
/// quoted, matrices are row-major with `;` between rows, `#` starts a comment.
class KeyValueFile {
 public:
  static KeyValueFile parse(const std::string& text);
  static KeyValueFile load(const std::filesystem::path& file);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  std::string require(const std::string& key) const;
  /// Keys with the given prefix, in file order.
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;
  /// Keys no accessor has asked for yet.
  std::vector<std::string> unused() const;

  double number(const std::string& key, double fallback) const;
  std::uint64_t integer(const std::string& key, std::uint64_t fallback) const;
  Eigen::MatrixXd matrix(const std::string& key) const;
  Eigen::VectorXd vector(const std::string& key) const;

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
  mutable std::map<std::string, bool> used_;
};

Eigen::MatrixXd parse_matrix(const std::string& text);
/// `1 2; 2` -> {{0,1}, {1}} with 1-based members.
std::vector<IndexSet> parse_index_sets(const std::string& text, int dim);

enum class Kind { kValidate, kSimulate, kDerivativeCheck, kBar, kLaplaceCheck };
std::optional<Kind> parse_kind(const std::string& name);
std::string to_string(Kind kind);

struct ExperimentConfig {
  Kind kind = Kind::kValidate;
  Eigen::MatrixXd P, P_tilde;
  Eigen::VectorXd theta0;
  Eigen::MatrixXd Theta;
  Eigen::MatrixXd sigma;
  Eigen::VectorXd z0;
  Eigen::MatrixXd a0;
  SimConfig sim;
  std::size_t replications = 1;
  std::vector<ExpTestFunction> test_functions;
  std::vector<IndexSet> sets_I;
  std::vector<double> epsilons{1e-2, 1e-3, 1e-4};
  std::vector<int> columns;  ///< 0-based; empty = all
  std::vector<double> laplace_alphas{0.5, 1.0, 2.0};
  std::vector<double> laplace_etas{0.5, 1.0, 2.0};
  std::filesystem::path output_dir = "out";
  std::uint64_t config_hash = 0;

  /// Builds the validated reflection pair and model.
  DiffusionModel model() const;
};

/// FNV-1a over the raw config bytes.
std::uint64_t fnv1a(const std::string& bytes);

/// Reads and checks every field needed by `kind`. Throws skosens::Error
/// (ConfigError for malformed or missing entries).
ExperimentConfig load_config(const std::string& text, Kind kind);

}  // namespace skosens::cli
