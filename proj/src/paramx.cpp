#include "skewmix/paramx.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "skewmix/error.hpp"

namespace skewmix {

std::string_view to_string(VariantTag tag) {
  switch (tag) {
    case VariantTag::A: return "A";
    case VariantTag::B: return "B";
    case VariantTag::G: return "G";
    case VariantTag::P: return "P";
    case VariantTag::SNI: return "SNI";
  }
  return "?";
}

VariantTag variant_tag_from_string(std::string_view name) {
  if (name == "A") return VariantTag::A;
  if (name == "B") return VariantTag::B;
  if (name == "G") return VariantTag::G;
  if (name == "P") return VariantTag::P;
  if (name == "SNI") return VariantTag::SNI;
  throw Error(ErrorCode::InvalidArgument, "unknown variant tag '" + std::string(name) + "'");
}

SpdMatrix spd_sqrt(const SpdMatrix& sigma) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma.matrix());
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
    throw Error(ErrorCode::NotPositiveDefinite, "spd_sqrt needs positive eigenvalues");
  }
  const Matrix& v = eig.eigenvectors();
  return SpdMatrix(symmetrize(v * eig.eigenvalues().cwiseSqrt().asDiagonal() * v.transpose()));
}

VariantParams::VariantParams(VariantTag tag, Vector mu, SpdMatrix sigma, Vector skew, std::optional<double> nu)
    : tag_(tag), mu_(std::move(mu)), sigma_(std::move(sigma)), skew_(std::move(skew)), nu_(nu) {
  if (mu_.size() != sigma_.dim() || skew_.size() != mu_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "variant parameter dimensions disagree");
  }
  if (nu_ && !(*nu_ > 0.0)) throw Error(ErrorCode::InvalidDof, "degrees of freedom must be > 0");
  double slack = 0.0;
  switch (tag_) {
    case VariantTag::A: {
      const Vector d = sigma_.matrix().diagonal().cwiseSqrt();
      const SpdMatrix r(symmetrize(d.cwiseInverse().asDiagonal() * sigma_.matrix() * d.cwiseInverse().asDiagonal()));
      slack = 1.0 - skew_.dot(r.solve(skew_));
      break;
    }
    case VariantTag::B:
    case VariantTag::P: slack = 1.0 - skew_.dot(sigma_.solve(skew_)); break;
    case VariantTag::G: slack = 1.0 - skew_.dot(sigma_.matrix() * skew_); break;
    case VariantTag::SNI: slack = 1.0 - skew_.squaredNorm(); break;
  }
  if (!(slack > 0.0)) {
    throw Error(ErrorCode::InfeasibleSkewness,
                std::string("variant ") + std::string(to_string(tag_)) + " skewness outside feasible region");
  }
}

RestrictedParams to_canonical(const VariantParams& v) {
  Vector delta;
  switch (v.tag()) {
    case VariantTag::B:
    case VariantTag::P: delta = v.skew(); break;
    case VariantTag::A: delta = v.sigma().matrix().diagonal().cwiseSqrt().cwiseProduct(v.skew()); break;
    case VariantTag::G: delta = v.sigma().matrix() * v.skew(); break;
    case VariantTag::SNI: delta = spd_sqrt(v.sigma()).matrix() * v.skew(); break;
  }
  return RestrictedParams(v.mu(), v.sigma(), std::move(delta), v.nu());
}

VariantParams from_canonical(const RestrictedParams& c, VariantTag target) {
  Vector skew;
  switch (target) {
    case VariantTag::B:
    case VariantTag::P: skew = c.delta(); break;
    case VariantTag::A: skew = c.delta().cwiseQuotient(c.sigma().matrix().diagonal().cwiseSqrt()); break;
    case VariantTag::G: skew = c.sigma_inv_delta(); break;
    case VariantTag::SNI: skew = spd_sqrt(c.sigma()).solve(c.delta()); break;
  }
  return VariantParams(target, c.mu(), c.sigma(), std::move(skew), c.nu());
}

ConvolutionParams conditioning_to_convolution(const RestrictedParams& c) {
  try {
    SpdMatrix tilde(symmetrize(c.sigma().matrix() - c.delta() * c.delta().transpose()));
    return {c.mu(), std::move(tilde), c.delta(), c.nu()};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotPositiveDefinite) throw;
    throw Error(ErrorCode::InfeasibleSkewness, "Sigma - delta delta^T is not positive definite");
  }
}

RestrictedParams convolution_to_conditioning(const ConvolutionParams& c) {
  const Vector& d = c.delta_tilde;
  return RestrictedParams(c.mu, SpdMatrix(symmetrize(c.sigma_tilde.matrix() + d * d.transpose())), d, c.nu);
}

ConvolutionParams unrestricted_to_convolution(const UnrestrictedParams& u) {
  try {
    Matrix tilde = u.sigma().matrix();
    tilde.diagonal() -= u.delta().cwiseAbs2();
    return {u.mu(), SpdMatrix(symmetrize(tilde)), u.delta(), u.nu()};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotPositiveDefinite) throw;
    throw Error(ErrorCode::InfeasibleSkewness, "Sigma - Delta^2 is not positive definite");
  }
}

UnrestrictedParams convolution_to_unrestricted(const ConvolutionParams& c) {
  Matrix sigma = c.sigma_tilde.matrix();
  sigma.diagonal() += c.delta_tilde.cwiseAbs2();
  return UnrestrictedParams(c.mu, SpdMatrix(symmetrize(sigma)), c.delta_tilde, c.nu);
}

}  // namespace skewmix
