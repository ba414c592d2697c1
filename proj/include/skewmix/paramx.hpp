#pragma once

// Conversions among the restricted parameterizations and between the
// conditioning-type and convolution-type parameter pairs.

#include <optional>
#include <string_view>

#include "skewmix/numerics.hpp"
#include "skewmix/params.hpp"

namespace skewmix {

/// Restricted variants. B and P share the canonical (μ, Σ, δ) form; A scales
/// δ by D = diag(√Σ₁₁, …, √Σ_pp) through the correlation matrix; G uses
/// δ = Σδ_G; SNI uses δ = Σ^{1/2}δ_S with the symmetric square root.
enum class VariantTag { A, B, G, P, SNI };

std::string_view to_string(VariantTag tag);
VariantTag variant_tag_from_string(std::string_view name);

/// A restricted skew normal (no ν) or skew t (ν) in one of the variant
/// parameterizations. The skewness vector is interpreted per tag.
class VariantParams {
 public:
  VariantParams(VariantTag tag, Vector mu, SpdMatrix sigma, Vector skew, std::optional<double> nu = std::nullopt);

  VariantTag tag() const { return tag_; }
  int dim() const { return static_cast<int>(mu_.size()); }
  const Vector& mu() const { return mu_; }
  const SpdMatrix& sigma() const { return sigma_; }
  const Vector& skew() const { return skew_; }
  std::optional<double> nu() const { return nu_; }

 private:
  VariantTag tag_;
  Vector mu_;
  SpdMatrix sigma_;
  Vector skew_;
  std::optional<double> nu_;
};

/// Y = μ + δ̃|Ỹ₀| + Ỹ₁ with Ỹ₁ scaled by Σ̃. For the unrestricted family δ̃
/// holds the diagonal of Δ̃.
struct ConvolutionParams {
  Vector mu;
  SpdMatrix sigma_tilde;
  Vector delta_tilde;
  std::optional<double> nu;
};

RestrictedParams to_canonical(const VariantParams& v);
VariantParams from_canonical(const RestrictedParams& c, VariantTag target);

/// δ̃ = δ, Σ̃ = Σ − δδᵀ.
ConvolutionParams conditioning_to_convolution(const RestrictedParams& c);
/// Σ = Σ̃ + δ̃δ̃ᵀ.
RestrictedParams convolution_to_conditioning(const ConvolutionParams& c);

/// Unrestricted analogue: Σ̃ = Σ − Δ².
ConvolutionParams unrestricted_to_convolution(const UnrestrictedParams& u);
UnrestrictedParams convolution_to_unrestricted(const ConvolutionParams& c);

/// Unique symmetric positive-definite square root (spectral).
SpdMatrix spd_sqrt(const SpdMatrix& sigma);

}  // namespace skewmix
