// E-step kernels. Every kernel computes one observation at a time and
// writes only its own row, so the serial and OpenMP drivers give identical
// bits.
//
// Latent structure of component h (convolution form):
//   W ~ gamma(ν/2, ν/2)          (W ≡ 1 for the normal families)
//   U | w ~ HN(0, 1/w)           (p-vector for the unrestricted families)
//   Y | u, w ~ N(μ + δu, Σ̃/w)     with Σ̃ = Σ − δδᵀ
// Given y, U | w, y is N(q, v/w) truncated to U > 0 with q = δᵀΣ⁻¹(y − μ)
// and v = 1 − δᵀΣ⁻¹δ, and W | y has density ∝ gamma(w; (ν+p)/2, (ν+d)/2)
// · Φ(q√w/√v).

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>

#include "internal.hpp"
#include "skewmix/error.hpp"
#include "skewmix/mixture.hpp"

namespace skewmix {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct RowGeometry {
  double d;  // Mahalanobis distance (y − μ)ᵀΣ⁻¹(y − μ)
  double q;  // δᵀΣ⁻¹(y − μ)
  double v;  // 1 − δᵀΣ⁻¹δ
};

RowGeometry geometry(const Vector& y, const RestrictedParams& c) {
  const Vector r = y - c.mu();
  return {c.sigma().quad_form_inv(r), c.sigma_inv_delta().dot(r), c.skew_variance()};
}

// E[log W | y] for W with density ∝ w^{α−1} e^{−βw} Φ(c√w).
//
// In s = log w the log-integrand h(s) = αs − βe^s + log Φ(c e^{s/2}) is
// concave; the mode is found by bisection on h′ and the integral is a
// trapezoid sum on a grid scaled by the curvature at the mode, walked
// outward until the terms are negligible.
double posterior_mean_log_weight(double alpha, double beta, double c) {
  const auto h = [&](double s) { return alpha * s - beta * std::exp(s) + log_norm_cdf(c * std::exp(0.5 * s)); };
  const auto dh = [&](double s) {
    const double u = c * std::exp(0.5 * s);
    return alpha - beta * std::exp(s) + 0.5 * u * inverse_mills(u);
  };
  double lo = std::log(alpha / beta) - 1.0;
  double hi = lo + 2.0;
  while (dh(lo) < 0.0) lo -= 2.0 * (hi - lo);
  while (dh(hi) > 0.0) hi += 2.0 * (hi - lo);
  for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (dh(mid) > 0.0 ? lo : hi) = mid;
  }
  const double mode = 0.5 * (lo + hi);
  // Curvature from a central difference of h′.
  const double eps = 1e-4;
  const double curv = std::max(1e-8, -(dh(mode + eps) - dh(mode - eps)) / (2.0 * eps));
  const double scale = 1.0 / std::sqrt(curv);
  const double step = 0.2 * scale;
  const double h0 = h(mode);

  double mass = 1.0;
  double first = 0.0;  // Σ (s − mode)·weight
  for (int dir : {-1, 1}) {
    for (int k = 1; k < 100000; ++k) {
      const double off = dir * k * step;
      const double wgt = std::exp(h(mode + off) - h0);
      mass += wgt;
      first += off * wgt;
      if (wgt < 1e-18 * mass && k * step > 3.0 * scale) break;
    }
  }
  return mode + first / mass;
}

struct RestrictedRow {
  double e1 = 0.0, e2 = 0.0, e3 = 0.0, e4 = 0.0;
};

RestrictedRow rmsn_row(const Vector& y, const RestrictedParams& c) {
  const RowGeometry g = geometry(y, c);
  const TruncMoments m = trunc_norm_moments(g.q, g.v);
  return {m.m1, m.m2, 0.0, 0.0};
}

RestrictedRow rmst_row(const Vector& y, const RestrictedParams& c, LogWeight log_weight) {
  const RowGeometry g = geometry(y, c);
  const double nu = *c.nu();
  const double p = c.dim();
  const double cs = g.q / std::sqrt(g.v);
  const double a0 = cs * std::sqrt((nu + p) / (nu + g.d));
  const double a2 = cs * std::sqrt((nu + p + 2.0) / (nu + g.d));
  RestrictedRow out;
  out.e2 = (nu + p) / (nu + g.d) * std::exp(log_t_cdf(a2, nu + p + 2.0) - log_t_cdf(a0, nu + p));
  const TruncMoments m = trunc_t_moments(g.q, g.v * (nu + g.d) / (nu + p + 2.0), nu + p + 2.0);
  out.e3 = out.e2 * m.m1;
  out.e4 = out.e2 * m.m2;
  switch (log_weight) {
    case LogWeight::exact:
      out.e1 = posterior_mean_log_weight(0.5 * (nu + p), 0.5 * (nu + g.d), cs);
      break;
    case LogWeight::one_step_late:
      out.e1 = out.e2 - std::log(0.5 * (nu + g.d)) - (nu + p) / (nu + g.d) +
               boost::math::digamma(0.5 * (nu + p));
      break;
    case LogWeight::none:
      out.e1 = kNaN;
      break;
  }
  return out;
}

void check_family(const MixtureModel& model, Family expected) {
  if (model.family() != expected) {
    throw Error(ErrorCode::InvalidArgument, std::string("E-step for ") + std::string(to_string(expected)) +
                                                " called on a " + std::string(to_string(model.family())) + " model");
  }
}

template <class RowFn>
EStepState restricted_estep(const Matrix& data, const MixtureModel& model, Exec exec, RowFn&& row_fn) {
  const int n = static_cast<int>(data.rows());
  const int g = model.g();
  if (n == 0) throw Error(ErrorCode::EmptyInput, "E-step on empty data");
  const Matrix logw = weighted_logpdfs(data, model, exec);
  EStepState s;
  Vector row_log;
  s.z = internal::normalize_rows(logw, row_log);
  s.loglik = pairwise_sum(std::span<const double>(row_log.data(), static_cast<std::size_t>(n)));
  s.e1.resize(n, g);
  s.e2.resize(n, g);
  s.e3.resize(n, g);
  s.e4.resize(n, g);
  internal::for_rows(n, exec, [&](int j) {
    const Vector y = data.row(j).transpose();
    for (int h = 0; h < g; ++h) {
      const RestrictedRow r = row_fn(y, model.restricted()[h]);
      s.e1(j, h) = r.e1;
      s.e2(j, h) = r.e2;
      s.e3(j, h) = r.e3;
      s.e4(j, h) = r.e4;
    }
  });
  return s;
}

// Importance sampling of (W, U) | y for one unrestricted component:
// W from its gamma prior-posterior part, then U sequentially from the
// truncated conditionals of N(q, Λ/w) (GHK), weighted by the product of
// the truncation probabilities.
struct McRow {
  double e1 = 0.0, e2 = 0.0, se1 = 0.0, se2 = 0.0;
  Vector e3, e3_se;
  Matrix e4;
};

McRow umst_row(const Vector& y, const UnrestrictedParams& c, int draws, std::uint64_t stream) {
  const int p = c.dim();
  const Vector r = y - c.mu();
  const Vector q = c.delta_sigma_inv() * r;
  const Matrix& l = c.lambda().lower();
  const bool is_t = c.is_skew_t();
  const double nu = is_t ? *c.nu() : 0.0;
  const double d = c.sigma().quad_form_inv(r);

  std::mt19937_64 rng(stream);
  std::gamma_distribution<double> gamma(is_t ? 0.5 * (nu + p) : 1.0, is_t ? 2.0 / (nu + d) : 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<double> logwt(static_cast<std::size_t>(draws));
  std::vector<double> ws(static_cast<std::size_t>(draws));
  Matrix us(p, draws);
  Vector z(p);
  for (int i = 0; i < draws; ++i) {
    const double w = is_t ? gamma(rng) : 1.0;
    const double sw = std::sqrt(w);
    double lw = 0.0;
    for (int k = 0; k < p; ++k) {
      double m = q[k];
      for (int t = 0; t < k; ++t) m += l(k, t) * z[t] / sw;
      const double bound = m * sw / l(k, k);  // need z_k > −bound
      lw += log_norm_cdf(bound);
      double u = unif(rng);
      while (u <= 0.0) u = unif(rng);
      const double tail = norm_cdf(bound);
      z[k] = tail > 0.0 ? -norm_quantile(std::clamp(u * tail, 1e-300, 1.0 - 1e-16)) : -bound;
      us(k, i) = m + l(k, k) * z[k] / sw;
    }
    logwt[i] = lw;
    ws[i] = w;
  }
  const double top = *std::max_element(logwt.begin(), logwt.end());
  double total = 0.0;
  for (double& v : logwt) {
    v = std::exp(v - top);
    total += v;
  }
  double sumsq = 0.0;
  for (double& v : logwt) {
    v /= total;
    sumsq += v * v;
  }
  const double ess = 1.0 / sumsq;
  if (!(ess >= kMinEffectiveSampleSize)) {
    throw Error(ErrorCode::EffectiveSampleSizeTooLow,
                "importance sampling effective sample size " + std::to_string(ess) + " < 100");
  }

  McRow out;
  out.e3 = Vector::Zero(p);
  out.e4 = Matrix::Zero(p, p);
  for (int i = 0; i < draws; ++i) {
    const double a = logwt[i];
    out.e1 += a * (is_t ? std::log(ws[i]) : 0.0);
    out.e2 += a * ws[i];
    out.e3 += a * ws[i] * us.col(i);
    out.e4.noalias() += (a * ws[i]) * us.col(i) * us.col(i).transpose();
  }
  // Self-normalized IS standard errors, sqrt(Σ ω_i² (θ_i − θ̂)²).
  double v1 = 0.0, v2 = 0.0;
  Vector v3 = Vector::Zero(p);
  for (int i = 0; i < draws; ++i) {
    const double a2 = logwt[i] * logwt[i];
    const double lw = is_t ? std::log(ws[i]) : 0.0;
    v1 += a2 * (lw - out.e1) * (lw - out.e1);
    v2 += a2 * (ws[i] - out.e2) * (ws[i] - out.e2);
    v3 += a2 * (ws[i] * us.col(i) - out.e3).cwiseAbs2();
  }
  out.se1 = std::sqrt(v1);
  out.se2 = std::sqrt(v2);
  out.e3_se = v3.cwiseSqrt();
  return out;
}

}  // namespace

EStepState estep_rmsn(const Matrix& data, const MixtureModel& model, Exec exec) {
  check_family(model, Family::rmsn);
  EStepState s = restricted_estep(data, model, exec, [](const Vector& y, const RestrictedParams& c) {
    return rmsn_row(y, c);
  });
  s.e3.resize(0, 0);
  s.e4.resize(0, 0);
  return s;
}

EStepState estep_rmst(const Matrix& data, const MixtureModel& model, LogWeight log_weight, Exec exec) {
  check_family(model, Family::rmst);
  return restricted_estep(data, model, exec, [log_weight](const Vector& y, const RestrictedParams& c) {
    return rmst_row(y, c, log_weight);
  });
}

EStepState estep_umst_mc(const Matrix& data, const MixtureModel& model, const McOptions& opts, Exec exec) {
  if (is_restricted(model.family())) {
    throw Error(ErrorCode::InvalidArgument, "Monte-Carlo E-step needs an unrestricted family");
  }
  const int p = model.dim();
  if (p > kMaxMcDim) {
    throw Error(ErrorCode::DimensionTooLarge, "Monte-Carlo E-step supports p <= " + std::to_string(kMaxMcDim));
  }
  if (opts.draws < kMinCdfDraws) {
    throw Error(ErrorCode::InvalidArgument, "Monte-Carlo E-step needs at least " + std::to_string(kMinCdfDraws) + " draws");
  }
  const int n = static_cast<int>(data.rows());
  const int g = model.g();
  if (n == 0) throw Error(ErrorCode::EmptyInput, "E-step on empty data");
  const Matrix logw = weighted_logpdfs(data, model, exec, opts.cdf);
  EStepState s;
  Vector row_log;
  s.z = internal::normalize_rows(logw, row_log);
  s.loglik = pairwise_sum(std::span<const double>(row_log.data(), static_cast<std::size_t>(n)));
  s.e1.resize(n, g);
  s.e2.resize(n, g);
  s.se1.resize(n, g);
  s.se2.resize(n, g);
  s.ue3.assign(g, Matrix(n, p));
  s.ue4.assign(g, Matrix(n, p * p));
  s.ue3_se.assign(g, Matrix(n, p));
  const std::uint64_t base = internal::mix64(opts.seed ^ internal::mix64(static_cast<std::uint64_t>(opts.iteration)));
  internal::for_rows(n, exec, [&](int j) {
    const Vector y = data.row(j).transpose();
    for (int h = 0; h < g; ++h) {
      const std::uint64_t stream =
          internal::mix64(base ^ internal::mix64((static_cast<std::uint64_t>(j) << 8) ^ static_cast<std::uint64_t>(h)));
      const McRow r = umst_row(y, model.unrestricted()[h], opts.draws, stream);
      s.e1(j, h) = r.e1;
      s.e2(j, h) = r.e2;
      s.se1(j, h) = r.se1;
      s.se2(j, h) = r.se2;
      s.ue3[h].row(j) = r.e3.transpose();
      s.ue3_se[h].row(j) = r.e3_se.transpose();
      for (int a = 0; a < p; ++a) {
        for (int b = 0; b < p; ++b) s.ue4[h](j, a * p + b) = r.e4(a, b);
      }
    }
  });
  return s;
}

EStepState estep(const Matrix& data, const MixtureModel& model, DofUpdate dof_update, const McOptions& mc,
                 Exec exec) {
  switch (model.family()) {
    case Family::rmsn: return estep_rmsn(data, model, exec);
    case Family::rmst:
      return estep_rmst(data, model, dof_update == DofUpdate::osl ? LogWeight::one_step_late : LogWeight::none, exec);
    case Family::umsn:
    case Family::umst: return estep_umst_mc(data, model, mc, exec);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown family");
}

}  // namespace skewmix
