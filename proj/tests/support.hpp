#pragma once

// Shared oracles for the unit and acceptance tests. Nothing here calls into
// the library's own quadrature, CDF or moment code, so agreement between the
// two is evidence rather than tautology.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "skewmix/numerics.hpp"
#include "skewmix/params.hpp"

namespace testsupport {

using skewmix::Matrix;
using skewmix::SpdMatrix;
using skewmix::Vector;
using Rng = std::mt19937_64;

inline double normal(Rng& rng) {
  return std::normal_distribution<double>()(rng);
}

inline double uniform(Rng& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

inline Vector normal_vector(Rng& rng, int p, double scale = 1.0) {
  Vector v(p);
  for (int i = 0; i < p; ++i) v[i] = scale * normal(rng);
  return v;
}

// Well-conditioned random SPD matrix with eigenvalues roughly in [0.3, 3].
inline Matrix random_spd(Rng& rng, int p) {
  Matrix a(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) a(i, j) = normal(rng);
  Matrix m = a * a.transpose() / p + 0.3 * Matrix::Identity(p, p);
  Vector s(p);
  for (int i = 0; i < p; ++i) s[i] = std::exp(uniform(rng, -0.5, 0.5));
  return s.asDiagonal() * m * s.asDiagonal();
}

// δ with δᵀΣ⁻¹δ = r² for r drawn in [0.2, 0.95].
inline Vector random_restricted_delta(Rng& rng, const Matrix& sigma) {
  const int p = static_cast<int>(sigma.rows());
  const Vector u = normal_vector(rng, p);
  const double r = uniform(rng, 0.2, 0.95);
  const Matrix l = sigma.llt().matrixL();
  return r * (l * u) / u.norm();
}

// Diagonal skewness with I − ΔΣ⁻¹Δ kept SPD by shrinking.
inline Vector random_unrestricted_delta(Rng& rng, const Matrix& sigma) {
  const int p = static_cast<int>(sigma.rows());
  Vector d(p);
  for (int i = 0; i < p; ++i) d[i] = uniform(rng, -1.0, 1.0) * std::sqrt(sigma(i, i));
  const Matrix sinv = sigma.inverse();
  for (;;) {
    const Matrix lambda = Matrix::Identity(p, p) - d.asDiagonal() * sinv * d.asDiagonal();
    if (Eigen::SelfAdjointEigenSolver<Matrix>(lambda).eigenvalues().minCoeff() > 0.05) return d;
    d *= 0.8;
  }
}

inline skewmix::RestrictedParams random_restricted(Rng& rng, int p, std::optional<double> nu = std::nullopt) {
  const Matrix sigma = random_spd(rng, p);
  const Vector delta = random_restricted_delta(rng, sigma);
  return {normal_vector(rng, p), SpdMatrix(sigma), delta, nu};
}

inline skewmix::UnrestrictedParams random_unrestricted(Rng& rng, int p, std::optional<double> nu = std::nullopt) {
  const Matrix sigma = random_spd(rng, p);
  const Vector delta = random_unrestricted_delta(rng, sigma);
  return {normal_vector(rng, p), SpdMatrix(sigma), delta, nu};
}

// ∫ f over (−∞, ∞) by adaptive Gauss–Kronrod on the mapped interval.
inline double integrate_line(const std::function<double(double)>& f, double tol = 1e-11) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, -inf, inf, 15, tol);
}

inline double integrate_interval(const std::function<double(double)>& f, double a, double b, double tol = 1e-11) {
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, tol);
}

// ∫∫ f(x, y) over the plane, nested.
inline double integrate_plane(const std::function<double(double, double)>& f, double tol = 1e-9) {
  return integrate_line([&](double x) { return integrate_line([&](double y) { return f(x, y); }, tol); }, tol);
}

// Fixed 60×60 Gauss–Legendre grid over the plane, each axis mapped by
// x = c + s·t/(1 − t²). For integrands that are too expensive for the
// adaptive rule (those behind a Monte Carlo CDF). f returns K values that
// are integrated together.
template <std::size_t K>
std::array<double, K> integrate_plane_grid(const std::function<std::array<double, K>(double, double)>& f,
                                           const Vector& center, const Vector& scale) {
  using Rule = boost::math::quadrature::gauss<double, 60>;
  std::vector<double> t, w;
  for (std::size_t i = 0; i < Rule::abscissa().size(); ++i) {
    t.push_back(Rule::abscissa()[i]);
    w.push_back(Rule::weights()[i]);
    if (Rule::abscissa()[i] != 0.0) {
      t.push_back(-Rule::abscissa()[i]);
      w.push_back(Rule::weights()[i]);
    }
  }
  const auto node = [&](std::size_t i, int axis, double& x, double& jac) {
    const double a = t[i], d = 1.0 - a * a;
    x = center[axis] + scale[axis] * a / d;
    jac = w[i] * scale[axis] * (1.0 + a * a) / (d * d);
  };
  std::array<double, K> total{};
  for (std::size_t i = 0; i < t.size(); ++i) {
    double x, jx;
    node(i, 0, x, jx);
    for (std::size_t j = 0; j < t.size(); ++j) {
      double y, jy;
      node(j, 1, y, jy);
      const std::array<double, K> v = f(x, y);
      for (std::size_t k = 0; k < K; ++k) total[k] += jx * jy * v[k];
    }
  }
  return total;
}

// Two-sample Kolmogorov–Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

// Asymptotic 1% critical value of the two-sample KS statistic.
inline double ks_critical_1pct(std::size_t n, std::size_t m) {
  const double c = std::sqrt(-0.5 * std::log(0.005));
  return c * std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * static_cast<double>(m)));
}

// Self-normalized importance-sampling estimate with its delta-method se.
struct IsEstimate {
  double mean = 0.0;
  double se = 0.0;
};

// Draws from the prior of the latent (U, W) and weights by the conditional
// density of y. Returns estimates of E[log W], E[W], E[WU], E[WU²] for the
// skew t (nu present) or E[U], E[U²] for the skew normal, given y.
//
// Hierarchy: W ~ gamma(ν/2, rate ν/2); U | w ~ |N(0, 1/w)|;
// Y | u, w ~ N(μ + δu, (Σ − δδᵀ)/w).
inline std::vector<IsEstimate> latent_moments_oracle(const Vector& y, const skewmix::RestrictedParams& c, int draws,
                                                     std::uint64_t seed) {
  Rng rng(seed);
  const int p = c.dim();
  const Matrix tilde = c.sigma().matrix() - c.delta() * c.delta().transpose();
  const Eigen::LLT<Matrix> llt(tilde);
  const bool t = c.nu().has_value();
  const double nu = t ? *c.nu() : 0.0;
  std::gamma_distribution<double> gd(t ? 0.5 * nu : 1.0, t ? 2.0 / nu : 1.0);
  std::vector<double> logw(static_cast<std::size_t>(draws));
  std::vector<std::vector<double>> vals(t ? 4 : 2, std::vector<double>(static_cast<std::size_t>(draws)));
  for (int i = 0; i < draws; ++i) {
    const double w = t ? gd(rng) : 1.0;
    const double u = std::abs(normal(rng)) / std::sqrt(w);
    const Vector r = y - c.mu() - c.delta() * u;
    const double quad = r.dot(llt.solve(r));
    logw[i] = 0.5 * p * std::log(w) - 0.5 * w * quad;
    if (t) {
      vals[0][i] = std::log(w);
      vals[1][i] = w;
      vals[2][i] = w * u;
      vals[3][i] = w * u * u;
    } else {
      vals[0][i] = u;
      vals[1][i] = u * u;
    }
  }
  const double m = *std::max_element(logw.begin(), logw.end());
  double sum = 0.0;
  std::vector<double> wt(static_cast<std::size_t>(draws));
  for (int i = 0; i < draws; ++i) sum += (wt[i] = std::exp(logw[i] - m));
  for (double& v : wt) v /= sum;
  std::vector<IsEstimate> out;
  for (const auto& v : vals) {
    double mean = 0.0;
    for (int i = 0; i < draws; ++i) mean += wt[i] * v[i];
    double var = 0.0;
    for (int i = 0; i < draws; ++i) var += wt[i] * wt[i] * (v[i] - mean) * (v[i] - mean);
    out.push_back({mean, std::sqrt(var)});
  }
  return out;
}

// Permutation-minimized misclassification by explicit recursion over all
// bijections of {0..k−1}, without any confusion-matrix shortcut.
inline double brute_force_rate(const std::vector<int>& pred, const std::vector<int>& truth) {
  int k = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) k = std::max({k, pred[i] + 1, truth[i] + 1});
  std::vector<int> perm(static_cast<std::size_t>(k), -1);
  std::vector<bool> used(static_cast<std::size_t>(k), false);
  std::size_t best = pred.size();
  std::function<void(int)> rec = [&](int pos) {
    if (pos == k) {
      std::size_t wrong = 0;
      for (std::size_t i = 0; i < pred.size(); ++i) wrong += perm[pred[i]] != truth[i];
      best = std::min(best, wrong);
      return;
    }
    for (int v = 0; v < k; ++v) {
      if (used[v]) continue;
      used[v] = true;
      perm[pos] = v;
      rec(pos + 1);
      used[v] = false;
    }
  };
  rec(0);
  return static_cast<double>(best) / static_cast<double>(pred.size());
}

}  // namespace testsupport
