// Moments of univariate normal and Student-t variables conditioned to be
// positive, in closed form (Mills ratio and the t-density identities
//   ∫_a^∞ t f(t) dt  = (ν + a²) f(a) / (ν − 1),
//   ∫_a^∞ t² f(t) dt = [a (ν + a²) f(a) + ν S(a)] / (ν − 2)).

#include <algorithm>
#include <cmath>

#include "skewmix/error.hpp"
#include "skewmix/numerics.hpp"

namespace skewmix {
namespace {

// φ(c)/Φ(c) + c, i.e. E[Z | Z > -c] for standard normal Z.
double truncated_mean_std(double c) {
  if (c > -5.0) return inverse_mills(c) + c;
  // For x = -c ≥ 5: 1/R(x) = x + K with K = 1/(x + 2/(x + 3/(x + ...))).
  const double x = -c;
  double t = 0.0;
  for (int k = 400; k >= 2; --k) t = k / (x + t);
  return 1.0 / (x + t);
}

void check_var(double var) {
  if (!(var > 0.0) || !std::isfinite(var)) {
    throw Error(ErrorCode::InvalidVariance, "variance must be positive and finite");
  }
}

}  // namespace

TruncMoments trunc_norm_moments(double mu, double var) {
  check_var(var);
  const double sd = std::sqrt(var);
  const double c = mu / sd;
  const double k = truncated_mean_std(c);
  const double lambda = k - c;
  const double m1 = sd * k;
  const double cond_var = std::max(0.0, var * (1.0 - lambda * k));
  return {m1, m1 * m1 + cond_var};
}

double trunc_t_mean(double mu, double var, double nu) {
  check_var(var);
  if (!(nu > 0.0)) throw Error(ErrorCode::InvalidDof, "degrees of freedom must be > 0");
  if (!(nu > 1.0)) throw Error(ErrorCode::MomentUndefined, "first truncated t moment needs nu > 1");
  const double sd = std::sqrt(var);
  const double a = -mu / sd;
  const double ratio = std::exp(t_logpdf(a, nu) - log_t_cdf(-a, nu));
  return mu + sd * (nu + a * a) * ratio / (nu - 1.0);
}

TruncMoments trunc_t_moments(double mu, double var, double nu) {
  check_var(var);
  if (!(nu > 0.0)) throw Error(ErrorCode::InvalidDof, "degrees of freedom must be > 0");
  if (!(nu > 2.0)) throw Error(ErrorCode::MomentUndefined, "second truncated t moment needs nu > 2");
  const double sd = std::sqrt(var);
  const double a = -mu / sd;
  const double ratio = std::exp(t_logpdf(a, nu) - log_t_cdf(-a, nu));  // f(a) / S(a)
  const double t1 = (nu + a * a) * ratio / (nu - 1.0);
  const double t2 = (a * (nu + a * a) * ratio + nu) / (nu - 2.0);
  const double m1 = mu + sd * t1;
  const double m2 = mu * mu + 2.0 * mu * sd * t1 + var * t2;
  return {m1, std::max(m2, m1 * m1)};
}

}  // namespace skewmix
