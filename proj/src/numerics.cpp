#include "skewmix/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "skewmix/error.hpp"

namespace skewmix {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::InvalidDof: return "InvalidDof";
    case ErrorCode::InvalidVariance: return "InvalidVariance";
    case ErrorCode::MomentUndefined: return "MomentUndefined";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InfeasibleSkewness: return "InfeasibleSkewness";
    case ErrorCode::RejectionBudgetExceeded: return "RejectionBudgetExceeded";
    case ErrorCode::AllZeroLikelihood: return "AllZeroLikelihood";
    case ErrorCode::DegenerateComponent: return "DegenerateComponent";
    case ErrorCode::DofSolveFailed: return "DofSolveFailed";
    case ErrorCode::EffectiveSampleSizeTooLow: return "EffectiveSampleSizeTooLow";
    case ErrorCode::InitFailed: return "InitFailed";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingValue: return "MissingValue";
    case ErrorCode::LabelNotInteger: return "LabelNotInteger";
    case ErrorCode::TooManyClasses: return "TooManyClasses";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kInvSqrt2 = 0.70710678118654752440;

void check_dof(double nu) {
  if (!(nu > 0.0)) throw Error(ErrorCode::InvalidDof, "degrees of freedom must be > 0, got " + std::to_string(nu));
}

// lgamma(a + b) - lgamma(a) without cancellation for large a.
double log_gamma_ratio(double a, double b) {
  using Policy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;
  return -std::log(boost::math::tgamma_delta_ratio(a, b, Policy()));
}

}  // namespace

Matrix chol(const Matrix& spd) {
  if (spd.rows() != spd.cols() || spd.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "chol expects a non-empty square matrix");
  }
  Eigen::LLT<Matrix> llt(spd);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "Cholesky pivot <= 0");
  }
  Matrix l = llt.matrixL();
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    if (!(l(i, i) > 0.0) || !std::isfinite(l(i, i))) {
      throw Error(ErrorCode::NotPositiveDefinite, "Cholesky pivot <= 0");
    }
  }
  return l;
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

SpdMatrix::SpdMatrix(Matrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols() || m_.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "SpdMatrix must be non-empty and square");
  }
  if (!m_.allFinite()) throw Error(ErrorCode::NotPositiveDefinite, "non-finite entries");
  const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
  if ((m_ - m_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(ErrorCode::NotPositiveDefinite, "matrix is not symmetric");
  }
  l_ = chol(m_);
  log_det_ = 2.0 * l_.diagonal().array().log().sum();
}

SpdMatrix SpdMatrix::identity(int dim) { return SpdMatrix(Matrix::Identity(dim, dim)); }

Vector SpdMatrix::solve(const Vector& b) const {
  Vector x = l_.triangularView<Eigen::Lower>().solve(b);
  l_.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

Matrix SpdMatrix::solve(const Matrix& b) const {
  Matrix x = l_.triangularView<Eigen::Lower>().solve(b);
  l_.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

double SpdMatrix::quad_form_inv(const Vector& x) const {
  return l_.triangularView<Eigen::Lower>().solve(x).squaredNorm();
}

Matrix SpdMatrix::inverse() const {
  return symmetrize(solve(Matrix(Matrix::Identity(dim(), dim()))));
}

double mvn_logpdf(const Vector& y, const Vector& mu, const SpdMatrix& sigma) {
  if (y.size() != mu.size() || y.size() != sigma.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "mvn_logpdf dimensions disagree");
  }
  const double p = static_cast<double>(y.size());
  return -0.5 * (p * kLog2Pi + sigma.log_det() + sigma.quad_form_inv(y - mu));
}

double mvt_logpdf(const Vector& y, const Vector& mu, const SpdMatrix& sigma, double nu) {
  if (y.size() != mu.size() || y.size() != sigma.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "mvt_logpdf dimensions disagree");
  }
  return mvt_logpdf_from_distance(sigma.quad_form_inv(y - mu), sigma.log_det(), nu, static_cast<int>(y.size()));
}

double mvt_logpdf_from_distance(double d, double log_det, double nu, int dim) {
  check_dof(nu);
  const double p = dim;
  return log_gamma_ratio(0.5 * nu, 0.5 * p) - 0.5 * p * std::log(nu * std::numbers::pi) - 0.5 * log_det -
         0.5 * (nu + p) * std::log1p(d / nu);
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double norm_logpdf(double x) { return -0.5 * (kLog2Pi + x * x); }

double mills_ratio(double x) {
  if (x < 5.0) return 0.5 * std::erfc(x * kInvSqrt2) / std::exp(norm_logpdf(x));
  // R(x) = 1/(x + 1/(x + 2/(x + 3/(x + ...)))), backward recurrence.
  double t = 0.0;
  for (int k = 400; k >= 1; --k) t = k / (x + t);
  return 1.0 / (x + t);
}

double inverse_mills(double x) {
  if (x > -5.0) return std::exp(norm_logpdf(x)) / norm_cdf(x);
  return 1.0 / mills_ratio(-x);
}

double log_norm_cdf(double x) {
  if (x > 0.0) return std::log1p(-0.5 * std::erfc(x * kInvSqrt2));
  if (x > -20.0) return std::log(norm_cdf(x));
  return norm_logpdf(x) + std::log(mills_ratio(-x));
}

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw Error(ErrorCode::InvalidArgument, "norm_quantile needs p in [0, 1]");
  }
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r + 67265.770927008700853) * r +
                45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((r * 5226.495278852545925 + 28729.085735721942674) * r + 39307.89580009271061) * r +
                21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
               1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
            4.6303378461565452959) * r + 1.42343711074968357734) /
          (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
               0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
            2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
               0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
            5.4637849111641143699) * r + 6.6579046435011037772) /
          (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
               7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
            0.59983220655588793769) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

double t_cdf(double x, double nu) {
  check_dof(nu);
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  // Double-precision internals: the long double default is several times slower.
  using Policy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;
  return boost::math::cdf(boost::math::students_t_distribution<double, Policy>(nu), x);
}

double t_logpdf(double x, double nu) {
  check_dof(nu);
  return log_gamma_ratio(0.5 * nu, 0.5) - 0.5 * std::log(nu * std::numbers::pi) -
         0.5 * (nu + 1.0) * std::log1p(x * x / nu);
}

double log_t_cdf(double x, double nu) {
  check_dof(nu);
  if (x > 0.0) return std::log1p(-t_cdf(-x, nu));
  const double c = t_cdf(x, nu);
  if (c > 1e-300) return std::log(c);
  // Leading-order tail: S(x) ≈ f(x)·(nu + x²)/(nu·|x|).
  return t_logpdf(x, nu) + std::log((nu + x * x) / (nu * std::abs(x)));
}

double logsumexp(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "logsumexp of an empty vector");
  if (values.size() == 1) return values[0];
  const double m = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kBlock = 16;
  if (values.size() <= kBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace skewmix
