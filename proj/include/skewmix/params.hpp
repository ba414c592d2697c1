#pragma once

#include <optional>

#include "skewmix/numerics.hpp"

namespace skewmix {

/// Canonical restricted skew normal / skew t parameters (μ, Σ, δ[, ν]).
///
/// Every restricted variant converts into this form. Feasibility
/// 1 − δᵀΣ⁻¹δ > 0 is enforced on construction (InfeasibleSkewness), along
/// with ν > 0 when present (InvalidDof).
class RestrictedParams {
 public:
  RestrictedParams(Vector mu, SpdMatrix sigma, Vector delta, std::optional<double> nu = std::nullopt);

  int dim() const { return static_cast<int>(mu_.size()); }
  const Vector& mu() const { return mu_; }
  const SpdMatrix& sigma() const { return sigma_; }
  const Vector& delta() const { return delta_; }
  std::optional<double> nu() const { return nu_; }
  bool is_skew_t() const { return nu_.has_value(); }

  /// Σ⁻¹δ.
  const Vector& sigma_inv_delta() const { return sigma_inv_delta_; }
  /// 1 − δᵀΣ⁻¹δ, the variance of the skewing argument.
  double skew_variance() const { return skew_variance_; }

  RestrictedParams with_nu(std::optional<double> nu) const;

 private:
  Vector mu_;
  SpdMatrix sigma_;
  Vector delta_;
  std::optional<double> nu_;
  Vector sigma_inv_delta_;
  double skew_variance_ = 1.0;
};

/// Unrestricted (Sahu-type) parameters with Δ = diag(δ); requires
/// Λ = I − ΔΣ⁻¹Δ to be SPD.
class UnrestrictedParams {
 public:
  UnrestrictedParams(Vector mu, SpdMatrix sigma, Vector delta, std::optional<double> nu = std::nullopt);

  int dim() const { return static_cast<int>(mu_.size()); }
  const Vector& mu() const { return mu_; }
  const SpdMatrix& sigma() const { return sigma_; }
  const Vector& delta() const { return delta_; }
  std::optional<double> nu() const { return nu_; }
  bool is_skew_t() const { return nu_.has_value(); }

  /// ΔΣ⁻¹ (p×p).
  const Matrix& delta_sigma_inv() const { return delta_sigma_inv_; }
  /// Λ = I − ΔΣ⁻¹Δ.
  const SpdMatrix& lambda() const { return lambda_; }

  UnrestrictedParams with_nu(std::optional<double> nu) const;

 private:
  Vector mu_;
  SpdMatrix sigma_;
  Vector delta_;
  std::optional<double> nu_;
  Matrix delta_sigma_inv_;
  SpdMatrix lambda_;
};

/// Extended skew normal parameters (μ, Σ, Δ p×q, Γ q×q, τ q). Covers the
/// unified skew normal, its q = 1 member (ESN) and the canonical
/// fundamental skew normal (τ = 0, Γ = I).
///
/// Requires Γ − ΔᵀΣ⁻¹Δ to be SPD.
class ExtendedParams {
 public:
  ExtendedParams(Vector mu, SpdMatrix sigma, Matrix delta, SpdMatrix gamma, Vector tau);

  /// τ = 0, Γ = I_q.
  static ExtendedParams cfusn(Vector mu, SpdMatrix sigma, Matrix delta);
  /// q = 1, Γ = 1.
  static ExtendedParams esn(Vector mu, SpdMatrix sigma, const Vector& delta, double tau);

  int dim() const { return static_cast<int>(mu_.size()); }
  int latent_dim() const { return static_cast<int>(delta_.cols()); }
  const Vector& mu() const { return mu_; }
  const SpdMatrix& sigma() const { return sigma_; }
  const Matrix& delta() const { return delta_; }
  const SpdMatrix& gamma() const { return gamma_; }
  const Vector& tau() const { return tau_; }

  /// ΔᵀΣ⁻¹ (q×p).
  const Matrix& delta_t_sigma_inv() const { return delta_t_sigma_inv_; }
  /// Γ − ΔᵀΣ⁻¹Δ.
  const SpdMatrix& conditional_cov() const { return conditional_cov_; }
  bool is_cfusn() const;

 private:
  Vector mu_;
  SpdMatrix sigma_;
  Matrix delta_;
  SpdMatrix gamma_;
  Vector tau_;
  Matrix delta_t_sigma_inv_;
  SpdMatrix conditional_cov_;
};

}  // namespace skewmix
