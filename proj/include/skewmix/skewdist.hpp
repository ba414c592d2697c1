#pragma once

// Log-densities and samplers for the restricted, unrestricted and extended
// skew normal / skew t families.

#include <cstdint>

#include "skewmix/numerics.hpp"
#include "skewmix/params.hpp"
#include "skewmix/paramx.hpp"

namespace skewmix {

/// A log-density whose evaluation went through a randomized multivariate
/// CDF. se is the standard error of value (zero on closed-form paths).
struct LogDensity {
  double value = 0.0;
  double se = 0.0;
};

/// Controls the multivariate CDF inside unrestricted/extended densities.
struct CdfOptions {
  int draws = 20000;
  std::uint64_t seed = 20130101;
};

double rmsn_logpdf(const Vector& y, const RestrictedParams& params);
double rmst_logpdf(const Vector& y, const RestrictedParams& params);
/// rmst_logpdf with the terms that depend only on (params, ν) hoisted.
/// Called with d = (y−μ)ᵀΣ⁻¹(y−μ) and arg = δᵀΣ⁻¹(y−μ), which do not depend
/// on ν; the ν searches reuse them across candidates.
class RmstKernel {
 public:
  RmstKernel(const RestrictedParams& params, double nu);
  double operator()(double d, double arg) const;

 private:
  double nu_, p_, log_const_, inv_sqrt_v_;
};
/// rmsn_logpdf or rmst_logpdf depending on whether ν is present.
double restricted_logpdf(const Vector& y, const RestrictedParams& params);

LogDensity umsn_logpdf(const Vector& y, const UnrestrictedParams& params, const CdfOptions& opts = {});
LogDensity umst_logpdf(const Vector& y, const UnrestrictedParams& params, const CdfOptions& opts = {});
LogDensity unrestricted_logpdf(const Vector& y, const UnrestrictedParams& params, const CdfOptions& opts = {});

/// Extended skew normal with scalar extension τ on top of restricted skew
/// normal parameters (ν must be absent).
double esn_logpdf(const Vector& y, const RestrictedParams& params, double tau);

LogDensity sun_logpdf(const Vector& y, const ExtendedParams& params, const CdfOptions& opts = {});
/// Requires params.is_cfusn(); evaluated from its own 2^q φ_p Φ_q formula.
LogDensity cfusn_logpdf(const Vector& y, const ExtendedParams& params, const CdfOptions& opts = {});

/// Evaluates the variant's published formula directly, without converting
/// to canonical form first.
double variant_logpdf(const Vector& y, const VariantParams& params);

enum class Representation { conditioning, convolution };

struct SampleBatch {
  Matrix rows;  // n × p
  std::uint64_t seed = 0;
  Representation representation = Representation::convolution;
};

/// Rows are produced in shards of kSampleShardRows; shard k draws from a
/// mt19937_64 seeded with seed_seq{seed_lo32, seed_hi32, k}. Output is
/// independent of the number of threads.
inline constexpr int kSampleShardRows = 1024;

/// Conditioning mode gives up with RejectionBudgetExceeded after
/// kRejectionBudgetFactor·2^q trials for a single draw (q latent
/// constraints).
inline constexpr int kRejectionBudgetFactor = 100;

SampleBatch sample(const RestrictedParams& params, int n, Representation rep, std::uint64_t seed);
SampleBatch sample(const UnrestrictedParams& params, int n, Representation rep, std::uint64_t seed);
SampleBatch sample(const ExtendedParams& params, int n, Representation rep, std::uint64_t seed);
SampleBatch sample(const VariantParams& params, int n, Representation rep, std::uint64_t seed);

}  // namespace skewmix
