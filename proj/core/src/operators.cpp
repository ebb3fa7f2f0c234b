#include "skosens/operators.hpp"

#include <cmath>

#include "skosens/error.hpp"

namespace skosens {

void ExpTestFunction::validate(int dim) const {
  if (eta.size() != dim || alpha.rows() != dim || alpha.cols() != dim) {
    throw Error(ErrorCode::kShapeMismatch, "test function: eta must be J and alpha J x J");
  }
  if (!eta.allFinite() || !alpha.allFinite() || eta.minCoeff() < 0.0 || alpha.minCoeff() < 0.0) {
    throw Error(ErrorCode::kNegativeEntry, "test function weights must be finite and nonnegative");
  }
}

double ExpTestFunction::operator()(const Eigen::Ref<const Eigen::VectorXd>& z,
                                   const Eigen::Ref<const Eigen::MatrixXd>& a) const {
  return std::exp(-eta.dot(z) - alpha.cwiseProduct(a).sum());
}

double LinearExpTerm::operator()(const Eigen::Ref<const Eigen::VectorXd>& z,
                                 const Eigen::Ref<const Eigen::MatrixXd>& a) const {
  return coefficient * std::exp(-z_weights.dot(z) - a_weights.cwiseProduct(a).sum());
}

TermList as_terms(const ExpTestFunction& f) { return {LinearExpTerm{1.0, f.eta, f.alpha}}; }

double evaluate(const TermList& terms, const Eigen::Ref<const Eigen::VectorXd>& z,
                const Eigen::Ref<const Eigen::MatrixXd>& a) {
  double s = 0.0;
  for (const auto& t : terms) s += t(z, a);
  return s;
}

Eigen::MatrixXd q_matrix(IndexSet I, const ReflectionSpec& spec) {
  const int J = spec.dim();
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(J, J);
  if (I.empty()) return M;
  const auto idx = I.indices();
  const Eigen::MatrixXd& inv = spec.tilde_principal_inverse(I);
  const int n = static_cast<int>(idx.size());
  for (int c = 0; c < n; ++c) {
    // column idx[c] of M picks up -R~^I inv(:, c)
    for (int i = 0; i < J; ++i) {
      double s = 0.0;
      for (int r = 0; r < n; ++r) s += spec.R_tilde()(i, idx[r]) * inv(r, c);
      M(i, idx[c]) -= s;
    }
  }
  for (int i : idx) M.row(i).setZero();
  return M;
}

Eigen::MatrixXd project_Q(const Eigen::Ref<const Eigen::MatrixXd>& a, IndexSet I,
                          const ReflectionSpec& spec) {
  const int J = spec.dim();
  if (a.rows() != J || a.cols() != J) throw Error(ErrorCode::kShapeMismatch, "Q_I: a must be J x J");
  if (!I.subset_of(IndexSet::full(J))) throw Error(ErrorCode::kInvalidArgument, "Q_I: I out of range");
  Eigen::MatrixXd out = q_matrix(I, spec) * a;
  for (int i : I.indices()) out.row(i).setZero();
  return out;
}

TermList expand_O_I(const ExpTestFunction& f, IndexSet I, const ReflectionSpec& spec) {
  const int J = spec.dim();
  f.validate(J);
  if (!I.subset_of(IndexSet::full(J))) throw Error(ErrorCode::kInvalidArgument, "O_I: I out of range");
  const Eigen::MatrixXd V = q_matrix(I, spec).transpose() * f.alpha;
  const auto free = I.complement(J).indices();
  const std::size_t count = std::size_t{1} << free.size();
  TermList terms;
  terms.reserve(count);
  for (std::size_t mask = 0; mask < count; ++mask) {
    LinearExpTerm t{1.0, f.eta, V};
    for (int i : I.indices()) t.z_weights(i) = 0.0;
    for (std::size_t s = 0; s < free.size(); ++s) {
      if ((mask >> s) & 1U) {
        t.z_weights(free[s]) = 0.0;
        t.coefficient = -t.coefficient;
      }
    }
    terms.push_back(std::move(t));
  }
  return terms;
}

TermList expand_O(const ExpTestFunction& f, const ReflectionSpec& spec) {
  TermList all;
  const int J = spec.dim();
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << J); ++bits) {
    auto part = expand_O_I(f, IndexSet(bits), spec);
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

double apply_T(const LinearExpTerm& term, const DiffusionModel& model,
               const Eigen::Ref<const Eigen::VectorXd>& z,
               const Eigen::Ref<const Eigen::MatrixXd>& a) {
  const auto& u = term.z_weights;
  const double quad = 0.5 * u.dot(model.covariance() * u);
  const double drift = model.drift(z).dot(u);
  return (quad - drift - term.a_weights.trace()) * term(z, a);
}

double apply_T(const TermList& terms, const DiffusionModel& model,
               const Eigen::Ref<const Eigen::VectorXd>& z,
               const Eigen::Ref<const Eigen::MatrixXd>& a) {
  double s = 0.0;
  for (const auto& t : terms) s += apply_T(t, model, z, a);
  return s;
}

Eigen::VectorXd reflected_gradient(const LinearExpTerm& term, const ReflectionSpec& spec,
                                   const Eigen::Ref<const Eigen::VectorXd>& z,
                                   const Eigen::Ref<const Eigen::MatrixXd>& a) {
  return -(spec.R().transpose() * term.z_weights) * term(z, a);
}

namespace {
void check_1d(double theta, double sigma2) {
  if (!(theta < 0.0) || !std::isfinite(theta)) throw Error(ErrorCode::kDomainError, "theta must be negative");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw Error(ErrorCode::kDomainError, "sigma2 must be positive");
}
}  // namespace

double laplace_1d(double alpha, double eta, double theta, double sigma2) {
  check_1d(theta, sigma2);
  if (!(alpha >= 0.0) || !(eta >= 0.0)) throw Error(ErrorCode::kDomainError, "alpha, eta must be >= 0");
  return -2.0 * theta / (alpha * sigma2 - theta + std::sqrt(2.0 * eta * sigma2 + theta * theta));
}

double laplace_1d_a_marginal(double eta, double theta, double sigma2) {
  check_1d(theta, sigma2);
  if (!(eta >= 0.0)) throw Error(ErrorCode::kDomainError, "eta must be >= 0");
  // theta + sqrt(theta^2 + 2 sigma2 eta) rewritten without cancellation
  return -2.0 * theta / (std::sqrt(theta * theta + 2.0 * sigma2 * eta) - theta);
}

}  // namespace skosens
