#pragma once

// Probability and linear-algebra kernel shared by every density, sampler
// and E-step formula. All densities are returned in log space.

#include <cstdint>
#include <span>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace skewmix {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Largest dimension accepted by the multivariate CDF routines.
inline constexpr int kMaxCdfDim = 6;
/// Smallest number of integrand evaluations accepted by mvn_cdf/mvt_cdf.
inline constexpr int kMinCdfDraws = 10000;

/// Symmetric positive-definite matrix with its Cholesky factor cached.
///
/// Construction checks symmetry (1e-12 relative to the largest entry) and
/// that every Cholesky pivot is strictly positive; both failures raise
/// NotPositiveDefinite. A value that exists is therefore always usable as a
/// covariance or scale matrix.
class SpdMatrix {
 public:
  explicit SpdMatrix(Matrix m);
  static SpdMatrix identity(int dim);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  /// Lower-triangular L with L Lᵀ = matrix().
  const Matrix& lower() const { return l_; }
  double log_det() const { return log_det_; }

  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& b) const;
  /// Squared Mahalanobis norm xᵀ M⁻¹ x.
  double quad_form_inv(const Vector& x) const;
  Matrix inverse() const;

 private:
  Matrix m_;
  Matrix l_;
  double log_det_ = 0.0;
};

/// Cholesky factor of a symmetric matrix; throws NotPositiveDefinite if any
/// pivot is not strictly positive.
Matrix chol(const Matrix& spd);

/// (M + Mᵀ)/2.
Matrix symmetrize(const Matrix& m);

double mvn_logpdf(const Vector& y, const Vector& mu, const SpdMatrix& sigma);
double mvt_logpdf(const Vector& y, const Vector& mu, const SpdMatrix& sigma, double nu);
/// mvt_logpdf given the squared Mahalanobis distance d and log det Σ.
double mvt_logpdf_from_distance(double d, double log_det, double nu, int p);

double norm_cdf(double x);
/// log Φ(x), accurate far into the left tail.
double log_norm_cdf(double x);
double norm_logpdf(double x);
/// Φ⁻¹(p) for p in (0, 1) (Wichura AS241, ~1e-16 relative).
double norm_quantile(double p);
/// Mills ratio (1 − Φ(x)) / φ(x).
double mills_ratio(double x);
/// φ(x) / Φ(x), stable for very negative x.
double inverse_mills(double x);

double t_cdf(double x, double nu);
double log_t_cdf(double x, double nu);
double t_logpdf(double x, double nu);

struct CdfEstimate {
  double estimate = 0.0;
  double se = 0.0;
};

/// P(X ≤ upper) for X ~ N(0, sigma), by separation of variables integrated
/// with a randomly shifted rank-1 lattice. The standard error comes from the
/// spread across independent shifts; the result is a pure function of the
/// arguments (seed included). One-dimensional problems are exact (se = 0).
CdfEstimate mvn_cdf(const Vector& upper, const SpdMatrix& sigma, int draws, std::uint64_t seed);

/// Central multivariate t analogue of mvn_cdf with nu degrees of freedom.
CdfEstimate mvt_cdf(const Vector& upper, const SpdMatrix& sigma, double nu, int draws,
                    std::uint64_t seed);

/// First and second moments of a univariate variable conditioned positive.
struct TruncMoments {
  double m1 = 0.0;
  double m2 = 0.0;
};

/// E[X | X > 0] and E[X² | X > 0] for X ~ N(mu, var).
TruncMoments trunc_norm_moments(double mu, double var);

/// Same for X = mu + sqrt(var)·T, T ~ t_nu. Needs nu > 2 (m2 is infinite
/// otherwise); see trunc_t_mean for the nu > 1 first moment alone.
TruncMoments trunc_t_moments(double mu, double var, double nu);
double trunc_t_mean(double mu, double var, double nu);

double logsumexp(std::span<const double> values);

/// Pairwise (cascade) summation. The association order depends only on the
/// length, which keeps reductions reproducible.
double pairwise_sum(std::span<const double> values);

}  // namespace skewmix
