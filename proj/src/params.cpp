#include "skewmix/params.hpp"

#include <cmath>
#include <string>

#include "skewmix/error.hpp"

namespace skewmix {
namespace {

void check_nu(const std::optional<double>& nu) {
  if (nu && !(*nu > 0.0)) throw Error(ErrorCode::InvalidDof, "degrees of freedom must be > 0");
}

void check_dims(const Vector& mu, const SpdMatrix& sigma, Eigen::Index skew_rows) {
  if (mu.size() != sigma.dim() || skew_rows != mu.size()) {
    throw Error(ErrorCode::DimensionMismatch, "mu, sigma and skewness dimensions disagree");
  }
  if (!mu.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite location");
}

// Builds an SPD matrix from a quantity that must be SPD for the skewness to
// be feasible.
SpdMatrix feasible_spd(const Matrix& m, const char* what) {
  try {
    return SpdMatrix(symmetrize(m));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotPositiveDefinite) throw;
    throw Error(ErrorCode::InfeasibleSkewness, std::string(what) + " is not positive definite");
  }
}

SpdMatrix unrestricted_lambda(const Vector& mu, const SpdMatrix& sigma, const Vector& delta) {
  check_dims(mu, sigma, delta.size());
  if (!delta.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite skewness");
  const Matrix d = delta.asDiagonal();
  const Matrix lam = Matrix::Identity(delta.size(), delta.size()) - d * sigma.solve(d);
  return feasible_spd(lam, "I - Delta Sigma^-1 Delta");
}

SpdMatrix extended_conditional(const Vector& mu, const SpdMatrix& sigma, const Matrix& delta,
                               const SpdMatrix& gamma, const Vector& tau) {
  check_dims(mu, sigma, delta.rows());
  if (gamma.dim() != delta.cols() || tau.size() != delta.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "Delta, Gamma and tau latent dimensions disagree");
  }
  if (!delta.allFinite() || !tau.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite parameter");
  return feasible_spd(gamma.matrix() - delta.transpose() * sigma.solve(delta), "Gamma - Delta^T Sigma^-1 Delta");
}

}  // namespace

RestrictedParams::RestrictedParams(Vector mu, SpdMatrix sigma, Vector delta, std::optional<double> nu)
    : mu_(std::move(mu)), sigma_(std::move(sigma)), delta_(std::move(delta)), nu_(nu) {
  check_dims(mu_, sigma_, delta_.size());
  check_nu(nu_);
  if (!delta_.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite skewness");
  sigma_inv_delta_ = sigma_.solve(delta_);
  skew_variance_ = 1.0 - delta_.dot(sigma_inv_delta_);
  if (!(skew_variance_ > 0.0)) {
    throw Error(ErrorCode::InfeasibleSkewness,
                "1 - delta^T Sigma^-1 delta = " + std::to_string(skew_variance_) + " <= 0");
  }
}

RestrictedParams RestrictedParams::with_nu(std::optional<double> nu) const {
  return RestrictedParams(mu_, sigma_, delta_, nu);
}

UnrestrictedParams::UnrestrictedParams(Vector mu, SpdMatrix sigma, Vector delta, std::optional<double> nu)
    : mu_(std::move(mu)),
      sigma_(std::move(sigma)),
      delta_(std::move(delta)),
      nu_(nu),
      lambda_(unrestricted_lambda(mu_, sigma_, delta_)) {
  check_nu(nu_);
  // ΔΣ⁻¹ = (Σ⁻¹Δ)ᵀ
  delta_sigma_inv_ = sigma_.solve(Matrix(delta_.asDiagonal())).transpose();
}

UnrestrictedParams UnrestrictedParams::with_nu(std::optional<double> nu) const {
  return UnrestrictedParams(mu_, sigma_, delta_, nu);
}

ExtendedParams::ExtendedParams(Vector mu, SpdMatrix sigma, Matrix delta, SpdMatrix gamma, Vector tau)
    : mu_(std::move(mu)),
      sigma_(std::move(sigma)),
      delta_(std::move(delta)),
      gamma_(std::move(gamma)),
      tau_(std::move(tau)),
      conditional_cov_(extended_conditional(mu_, sigma_, delta_, gamma_, tau_)) {
  delta_t_sigma_inv_ = sigma_.solve(delta_).transpose();
}

ExtendedParams ExtendedParams::cfusn(Vector mu, SpdMatrix sigma, Matrix delta) {
  const int q = static_cast<int>(delta.cols());
  return ExtendedParams(std::move(mu), std::move(sigma), std::move(delta), SpdMatrix::identity(q),
                        Vector::Zero(q));
}

ExtendedParams ExtendedParams::esn(Vector mu, SpdMatrix sigma, const Vector& delta, double tau) {
  return ExtendedParams(std::move(mu), std::move(sigma), Matrix(delta), SpdMatrix::identity(1),
                        Vector::Constant(1, tau));
}

bool ExtendedParams::is_cfusn() const {
  const int q = latent_dim();
  return tau_.isZero(0.0) && gamma_.matrix() == Matrix::Identity(q, q);
}

}  // namespace skewmix
