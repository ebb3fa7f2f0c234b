#include "skosens/reflection.hpp"

#include <cmath>
#include <sstream>

#include "skosens/error.hpp"

namespace skosens {
namespace {

constexpr int kPowerIterations = 200;
constexpr double kSpectralMargin = 1e-9;
constexpr int kMaxCachedDim = 12;

void check_entries(const Eigen::MatrixXd& P, const char* name) {
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    for (Eigen::Index j = 0; j < P.cols(); ++j) {
      if (!std::isfinite(P(i, j))) {
        throw Error(ErrorCode::kInvalidArgument, std::string(name) + " has a non-finite entry");
      }
      if (P(i, j) < 0.0) {
        std::ostringstream os;
        os << name << "(" << i + 1 << "," << j + 1 << ") = " << P(i, j) << " is negative";
        throw Error(ErrorCode::kNegativeEntry, os.str());
      }
    }
    if (P(i, i) != 0.0) {
      std::ostringstream os;
      os << name << "(" << i + 1 << "," << i + 1 << ") = " << P(i, i) << " must be zero";
      throw Error(ErrorCode::kNonzeroDiagonal, os.str());
    }
  }
}

Eigen::MatrixXd principal_inverse_of(const Eigen::MatrixXd& R, IndexSet I) {
  const auto idx = I.indices();
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd sub(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) sub(a, b) = R(idx[a], idx[b]);
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::kSingularSystem, "principal submatrix of reflection matrix is singular");
  }
  return lu.inverse();
}

}  // namespace

struct ReflectionSpec::InverseCache {
  // Indexed by bitmask; empty when dim > kMaxCachedDim.
  std::vector<Eigen::MatrixXd> plain;
  std::vector<Eigen::MatrixXd> tilde;
};

void ToleranceConfig::validate() const {
  if (!(tau_zero > 0.0) || !(tau_fp > 0.0) || max_iters < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "ToleranceConfig: tau_zero, tau_fp must be positive and max_iters >= 1");
  }
}

const Eigen::MatrixXd& ReflectionSpec::tilde_principal_inverse(IndexSet I) const {
  if (I.empty() || !I.subset_of(IndexSet::full(dim()))) {
    throw Error(ErrorCode::kInvalidArgument, "principal inverse needs a nonempty index set");
  }
  if (cache_->tilde.empty()) {
    thread_local Eigen::MatrixXd scratch;
    scratch = principal_inverse_of(R_tilde_, I);
    return scratch;
  }
  return cache_->tilde[I.bits()];
}

const Eigen::MatrixXd& ReflectionSpec::principal_inverse(IndexSet I) const {
  if (I.empty() || !I.subset_of(IndexSet::full(dim()))) {
    throw Error(ErrorCode::kInvalidArgument, "principal inverse needs a nonempty index set");
  }
  if (cache_->plain.empty()) {
    thread_local Eigen::MatrixXd scratch;
    scratch = principal_inverse_of(R_, I);
    return scratch;
  }
  return cache_->plain[I.bits()];
}

double estimate_spectral_radius(const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd A = P.cwiseAbs();
  const Eigen::Index n = A.rows();
  if (n == 0) return 0.0;
  // Iterating with E + |P| keeps the Perron root dominant even for periodic
  // matrices, whose spectrum has several eigenvalues of modulus rho.
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n).normalized();
  for (int it = 0; it < kPowerIterations; ++it) {
    Eigen::VectorXd next = v + A * v;
    const double norm = next.norm();
    if (norm == 0.0 || !std::isfinite(norm)) break;
    v = next / norm;
  }
  return v.dot(A * v) / v.squaredNorm();
}

ReflectionSpec validate_reflection_matrices(const Eigen::MatrixXd& P,
                                            const Eigen::MatrixXd& P_tilde) {
  if (P.rows() != P.cols() || P_tilde.rows() != P_tilde.cols() || P.rows() != P_tilde.rows() ||
      P.rows() == 0) {
    throw Error(ErrorCode::kShapeMismatch, "P and P_tilde must be square of equal dimension");
  }
  if (P.rows() > 64) throw Error(ErrorCode::kShapeMismatch, "dimension above 64 unsupported");
  check_entries(P, "P");
  check_entries(P_tilde, "P_tilde");

  ReflectionSpec spec;
  spec.P_ = P;
  spec.P_tilde_ = P_tilde;
  spec.rho_P_ = estimate_spectral_radius(P);
  spec.rho_P_tilde_ = estimate_spectral_radius(P_tilde);
  for (double rho : {spec.rho_P_, spec.rho_P_tilde_}) {
    if (rho >= 1.0 - kSpectralMargin) {
      std::ostringstream os;
      os << "spectral radius estimate " << rho << " is not below 1";
      throw Error(ErrorCode::kSpectralRadiusTooLarge, os.str());
    }
  }

  const Eigen::Index n = P.rows();
  const Eigen::MatrixXd E = Eigen::MatrixXd::Identity(n, n);
  spec.R_ = E - P;
  spec.R_tilde_ = E - P_tilde;

  // Contraction weights: (E - P^) w = 1 has a positive solution iff rho(P^) < 1.
  const Eigen::MatrixXd P_hat = P.cwiseMax(P_tilde);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(E - P_hat);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::kSpectralRadiusTooLarge,
                "E - max(P, P_tilde) is singular; no common contraction weights");
  }
  spec.w_ = lu.solve(Eigen::VectorXd::Ones(n));
  if (!(spec.w_.minCoeff() >= 1.0 - 1e-9) || !spec.w_.allFinite()) {
    throw Error(ErrorCode::kSpectralRadiusTooLarge,
                "max(P, P_tilde) has spectral radius >= 1; no common contraction weights");
  }
  spec.w_ = spec.w_.cwiseMax(1.0);
  const Eigen::VectorXd Pw = P_hat * spec.w_;
  spec.eta_ = Pw.cwiseQuotient(spec.w_).maxCoeff();
  if (!(spec.eta_ < 1.0)) {
    throw Error(ErrorCode::kSpectralRadiusTooLarge, "contraction factor eta is not below 1");
  }

  auto cache = std::make_shared<ReflectionSpec::InverseCache>();
  if (n <= kMaxCachedDim) {
    const std::size_t count = std::size_t{1} << n;
    cache->plain.resize(count);
    cache->tilde.resize(count);
    for (std::uint64_t bits = 1; bits < count; ++bits) {
      cache->plain[bits] = principal_inverse_of(spec.R_, IndexSet(bits));
      cache->tilde[bits] = principal_inverse_of(spec.R_tilde_, IndexSet(bits));
    }
  }
  spec.cache_ = std::move(cache);
  return spec;
}

double weighted_sup_distance(const GridPath& a, const GridPath& b, const Eigen::VectorXd& w) {
  if (!a.same_grid(b) || !a.same_shape(b) || a.rows() != w.size()) {
    throw Error(ErrorCode::kShapeMismatch, "weighted_sup_distance: grid or shape mismatch");
  }
  double dist = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const auto pa = a.at(k);
    const auto pb = b.at(k);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      dist = std::max(dist, (pa.row(i) - pb.row(i)).cwiseAbs().maxCoeff() / w(i));
    }
  }
  return dist;
}

}  // namespace skosens
