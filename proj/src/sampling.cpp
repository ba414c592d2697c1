// Samplers for every family, by conditioning (rejection on the latent sign
// constraints) or by convolution (truncated latent plus independent noise).

#include <algorithm>
#include <cmath>
#include <exception>
#include <optional>
#include <random>
#include <string>

#include "skewmix/error.hpp"
#include "skewmix/skewdist.hpp"

namespace skewmix {
namespace {

using Rng = std::mt19937_64;

Rng shard_rng(std::uint64_t seed, int shard) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(shard)};
  return Rng(seq);
}

Vector std_normals(Rng& rng, int k) {
  std::normal_distribution<double> nd;
  Vector z(k);
  for (int i = 0; i < k; ++i) z[i] = nd(rng);
  return z;
}

// 1/√W with W ~ gamma(ν/2, rate ν/2); 1 for the normal family.
double t_scale(Rng& rng, const std::optional<double>& nu) {
  if (!nu) return 1.0;
  std::gamma_distribution<double> gd(0.5 * *nu, 2.0 / *nu);
  return 1.0 / std::sqrt(gd(rng));
}

long long rejection_budget(int q) {
  return static_cast<long long>(kRejectionBudgetFactor) << q;
}

[[noreturn]] void budget_exceeded(int q) {
  throw Error(ErrorCode::RejectionBudgetExceeded,
              "no accepted draw after " + std::to_string(rejection_budget(q)) + " trials (q = " + std::to_string(q) + ")");
}

// Runs draw_row(rng) for every row, shard by shard, in parallel. Exceptions raised in
// worker threads are rethrown on the caller.
template <class DrawRow>
Matrix sharded(int n, int p, std::uint64_t seed, DrawRow&& draw_row) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "sample size must be >= 1");
  Matrix rows(n, p);
  const int shards = (n + kSampleShardRows - 1) / kSampleShardRows;
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (int s = 0; s < shards; ++s) {
    try {
      Rng rng = shard_rng(seed, s);
      const int end = std::min(n, (s + 1) * kSampleShardRows);
      for (int i = s * kSampleShardRows; i < end; ++i) rows.row(i) = draw_row(rng).transpose();
    } catch (...) {
#pragma omp critical(skewmix_sample_error)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

// Conditioning: draw (X₀, X₁) ~ N(0, [[Γ, Δᵀ], [Δ, Σ]]) until X₀ + τ > 0,
// then Y = μ + X₁/√W.
Matrix sample_conditioning(const Vector& mu, const Matrix& sigma, const Matrix& delta, const Matrix& gamma,
                           const Vector& tau, const std::optional<double>& nu, int n, std::uint64_t seed) {
  const int p = static_cast<int>(mu.size());
  const int q = static_cast<int>(delta.cols());
  Matrix joint(p + q, p + q);
  joint << gamma, delta.transpose(), delta, sigma;
  const Matrix l = chol(symmetrize(joint));
  const long long budget = rejection_budget(q);
  return sharded(n, p, seed, [&](Rng& rng) -> Vector {
    for (long long trial = 0; trial < budget; ++trial) {
      const Vector x = l * std_normals(rng, p + q);
      if (((x.head(q) + tau).array() > 0.0).all()) return mu + x.tail(p) * t_scale(rng, nu);
    }
    budget_exceeded(q);
  });
}

// Convolution for restricted/unrestricted: Y = μ + (Δ̃|Z₀| + L̃Z₁)/√W.
Matrix sample_convolution(const Vector& mu, const Matrix& sigma_tilde, const Matrix& delta,
                          const std::optional<double>& nu, int n, std::uint64_t seed) {
  const int p = static_cast<int>(mu.size());
  const int q = static_cast<int>(delta.cols());
  const Matrix l = chol(symmetrize(sigma_tilde));
  return sharded(n, p, seed, [&](Rng& rng) -> Vector {
    const Vector z0 = std_normals(rng, q).cwiseAbs();
    const Vector z1 = std_normals(rng, p);
    return mu + (delta * z0 + l * z1) * t_scale(rng, nu);
  });
}

}  // namespace

SampleBatch sample(const RestrictedParams& params, int n, Representation rep, std::uint64_t seed) {
  const Matrix delta = params.delta();
  SampleBatch batch{Matrix(), seed, rep};
  if (rep == Representation::conditioning) {
    batch.rows = sample_conditioning(params.mu(), params.sigma().matrix(), delta, Matrix::Identity(1, 1),
                                     Vector::Zero(1), params.nu(), n, seed);
  } else {
    const Matrix sigma_tilde = params.sigma().matrix() - delta * delta.transpose();
    batch.rows = sample_convolution(params.mu(), sigma_tilde, delta, params.nu(), n, seed);
  }
  return batch;
}

SampleBatch sample(const UnrestrictedParams& params, int n, Representation rep, std::uint64_t seed) {
  const int p = params.dim();
  const Matrix delta = params.delta().asDiagonal();
  SampleBatch batch{Matrix(), seed, rep};
  if (rep == Representation::conditioning) {
    batch.rows = sample_conditioning(params.mu(), params.sigma().matrix(), delta, Matrix::Identity(p, p),
                                     Vector::Zero(p), params.nu(), n, seed);
  } else {
    const Matrix sigma_tilde = params.sigma().matrix() - delta * delta;
    batch.rows = sample_convolution(params.mu(), sigma_tilde, delta, params.nu(), n, seed);
  }
  return batch;
}

SampleBatch sample(const ExtendedParams& params, int n, Representation rep, std::uint64_t seed) {
  SampleBatch batch{Matrix(), seed, rep};
  if (rep == Representation::conditioning) {
    batch.rows = sample_conditioning(params.mu(), params.sigma().matrix(), params.delta(), params.gamma().matrix(),
                                     params.tau(), std::nullopt, n, seed);
    return batch;
  }
  // Y = μ + ΔΓ⁻¹(V − τ) + E, V ~ N(τ, Γ) truncated to V > 0,
  // E ~ N(0, Σ − ΔΓ⁻¹Δᵀ).
  const int p = params.dim();
  const int q = params.latent_dim();
  const Matrix& delta = params.delta();
  const Matrix coef = params.gamma().solve(Matrix(delta.transpose())).transpose();  // ΔΓ⁻¹
  const Matrix le = chol(symmetrize(params.sigma().matrix() - coef * delta.transpose()));
  const Matrix& lg = params.gamma().lower();
  const Vector& tau = params.tau();
  const long long budget = rejection_budget(q);
  batch.rows = sharded(n, p, seed, [&](Rng& rng) -> Vector {
    Vector centered(q);  // V − τ
    if (q == 1) {
      const double s = lg(0, 0);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      double u = unif(rng);
      while (u <= 0.0) u = unif(rng);
      // V − τ = s·z with z > −τ/s: z = −Φ⁻¹(U·Φ(τ/s)).
      centered[0] = -s * norm_quantile(u * norm_cdf(tau[0] / s));
    } else {
      long long trial = 0;
      for (; trial < budget; ++trial) {
        centered = lg * std_normals(rng, q);
        if (((centered + tau).array() > 0.0).all()) break;
      }
      if (trial == budget) budget_exceeded(q);
    }
    return params.mu() + coef * centered + le * std_normals(rng, p);
  });
  return batch;
}

SampleBatch sample(const VariantParams& params, int n, Representation rep, std::uint64_t seed) {
  return sample(to_canonical(params), n, rep, seed);
}

}  // namespace skewmix
