#include "skewmix/skewdist.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "skewmix/error.hpp"

namespace skewmix {
namespace {

constexpr double kLn2 = std::numbers::ln2;

void check_y(const Vector& y, int p) {
  if (y.size() != p) throw Error(ErrorCode::DimensionMismatch, "observation dimension disagrees with parameters");
}

// log of an MC probability estimate, with the delta-method se of the log.
LogDensity log_estimate(const CdfEstimate& e) {
  if (!(e.estimate > 0.0)) return {-std::numeric_limits<double>::infinity(), 0.0};
  return {std::log(e.estimate), e.se / e.estimate};
}

// Restricted skew t skewing term, log T_{ν+p}(δᵀΣ⁻¹(y−μ)·√((ν+p)/(ν+d)) / √v).
double log_skew_t_term(double arg, double v, double d, double nu, int p) {
  const double scaled = arg * std::sqrt((nu + p) / (nu + d)) / std::sqrt(v);
  return log_t_cdf(scaled, nu + p);
}

}  // namespace

double rmsn_logpdf(const Vector& y, const RestrictedParams& params) {
  check_y(y, params.dim());
  if (params.is_skew_t()) throw Error(ErrorCode::InvalidArgument, "rmsn_logpdf called with skew t parameters");
  const Vector r = y - params.mu();
  const double arg = params.sigma_inv_delta().dot(r);
  return kLn2 + mvn_logpdf(y, params.mu(), params.sigma()) + log_norm_cdf(arg / std::sqrt(params.skew_variance()));
}

double rmst_logpdf(const Vector& y, const RestrictedParams& params) {
  check_y(y, params.dim());
  if (!params.is_skew_t()) throw Error(ErrorCode::InvalidArgument, "rmst_logpdf needs degrees of freedom");
  const Vector r = y - params.mu();
  return RmstKernel(params, *params.nu())(params.sigma().quad_form_inv(r), params.sigma_inv_delta().dot(r));
}

RmstKernel::RmstKernel(const RestrictedParams& params, double nu)
    : nu_(nu),
      p_(params.dim()),
      // log 2 + the t density at d = 0.
      log_const_(kLn2 + mvt_logpdf_from_distance(0.0, params.sigma().log_det(), nu, params.dim())),
      inv_sqrt_v_(1.0 / std::sqrt(params.skew_variance())) {}

double RmstKernel::operator()(double d, double arg) const {
  const double scaled = arg * std::sqrt((nu_ + p_) / (nu_ + d)) * inv_sqrt_v_;
  return log_const_ - 0.5 * (nu_ + p_) * std::log1p(d / nu_) + log_t_cdf(scaled, nu_ + p_);
}

double restricted_logpdf(const Vector& y, const RestrictedParams& params) {
  return params.is_skew_t() ? rmst_logpdf(y, params) : rmsn_logpdf(y, params);
}

LogDensity umsn_logpdf(const Vector& y, const UnrestrictedParams& params, const CdfOptions& opts) {
  check_y(y, params.dim());
  if (params.is_skew_t()) throw Error(ErrorCode::InvalidArgument, "umsn_logpdf called with skew t parameters");
  const int p = params.dim();
  const Vector upper = params.delta_sigma_inv() * (y - params.mu());
  const LogDensity cdf = log_estimate(mvn_cdf(upper, params.lambda(), opts.draws, opts.seed));
  return {p * kLn2 + mvn_logpdf(y, params.mu(), params.sigma()) + cdf.value, cdf.se};
}

LogDensity umst_logpdf(const Vector& y, const UnrestrictedParams& params, const CdfOptions& opts) {
  check_y(y, params.dim());
  if (!params.is_skew_t()) throw Error(ErrorCode::InvalidArgument, "umst_logpdf needs degrees of freedom");
  const int p = params.dim();
  const double nu = *params.nu();
  const Vector r = y - params.mu();
  const double d = params.sigma().quad_form_inv(r);
  const Vector upper = params.delta_sigma_inv() * r * std::sqrt((nu + p) / (nu + d));
  const LogDensity cdf = log_estimate(mvt_cdf(upper, params.lambda(), nu + p, opts.draws, opts.seed));
  return {p * kLn2 + mvt_logpdf(y, params.mu(), params.sigma(), nu) + cdf.value, cdf.se};
}

LogDensity unrestricted_logpdf(const Vector& y, const UnrestrictedParams& params, const CdfOptions& opts) {
  return params.is_skew_t() ? umst_logpdf(y, params, opts) : umsn_logpdf(y, params, opts);
}

double esn_logpdf(const Vector& y, const RestrictedParams& params, double tau) {
  check_y(y, params.dim());
  if (params.is_skew_t()) throw Error(ErrorCode::InvalidArgument, "esn_logpdf is defined for the normal family only");
  const double arg = params.sigma_inv_delta().dot(y - params.mu());
  return mvn_logpdf(y, params.mu(), params.sigma()) +
         log_norm_cdf((tau + arg) / std::sqrt(params.skew_variance())) - log_norm_cdf(tau);
}

LogDensity sun_logpdf(const Vector& y, const ExtendedParams& params, const CdfOptions& opts) {
  check_y(y, params.dim());
  const Vector upper = params.tau() + params.delta_t_sigma_inv() * (y - params.mu());
  const LogDensity num = log_estimate(mvn_cdf(upper, params.conditional_cov(), opts.draws, opts.seed));
  const LogDensity den = log_estimate(mvn_cdf(params.tau(), params.gamma(), opts.draws, opts.seed));
  return {mvn_logpdf(y, params.mu(), params.sigma()) + num.value - den.value,
          std::hypot(num.se, den.se)};
}

LogDensity cfusn_logpdf(const Vector& y, const ExtendedParams& params, const CdfOptions& opts) {
  check_y(y, params.dim());
  if (!params.is_cfusn()) throw Error(ErrorCode::InvalidArgument, "cfusn_logpdf needs tau = 0 and Gamma = I");
  const int q = params.latent_dim();
  const Vector upper = params.delta_t_sigma_inv() * (y - params.mu());
  const LogDensity cdf = log_estimate(mvn_cdf(upper, params.conditional_cov(), opts.draws, opts.seed));
  return {q * kLn2 + mvn_logpdf(y, params.mu(), params.sigma()) + cdf.value, cdf.se};
}

double variant_logpdf(const Vector& y, const VariantParams& params) {
  check_y(y, params.dim());
  const Vector r = y - params.mu();
  const Matrix& sigma = params.sigma().matrix();
  const Vector& s = params.skew();
  double arg = 0.0;
  double var = 1.0;
  switch (params.tag()) {
    case VariantTag::A: {
      // δ_Aᵀ R⁻¹ D⁻¹ (y − μ) with R = D⁻¹ Σ D⁻¹.
      const Vector dinv = sigma.diagonal().cwiseSqrt().cwiseInverse();
      const SpdMatrix corr(symmetrize(dinv.asDiagonal() * sigma * dinv.asDiagonal()));
      const Vector rinv_skew = corr.solve(s);
      arg = rinv_skew.dot(dinv.cwiseProduct(r));
      var = 1.0 - s.dot(rinv_skew);
      break;
    }
    case VariantTag::B:
    case VariantTag::P: {
      const Vector sinv_skew = params.sigma().solve(s);
      arg = sinv_skew.dot(r);
      var = 1.0 - s.dot(sinv_skew);
      break;
    }
    case VariantTag::G:
      arg = s.dot(r);
      var = 1.0 - s.dot(sigma * s);
      break;
    case VariantTag::SNI:
      arg = s.dot(spd_sqrt(params.sigma()).solve(r));
      var = 1.0 - s.squaredNorm();
      break;
  }
  if (!(var > 0.0)) throw Error(ErrorCode::InfeasibleSkewness, "variant skewing variance <= 0");
  if (!params.nu()) {
    return kLn2 + mvn_logpdf(y, params.mu(), params.sigma()) + log_norm_cdf(arg / std::sqrt(var));
  }
  const double nu = *params.nu();
  const double d = params.sigma().quad_form_inv(r);
  return kLn2 + mvt_logpdf(y, params.mu(), params.sigma(), nu) + log_skew_t_term(arg, var, d, nu, params.dim());
}

}  // namespace skewmix
