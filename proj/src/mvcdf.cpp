// Multivariate normal and t orthant-type probabilities by separation of
// variables (Genz), integrated with a randomly shifted Richtmyer lattice.
//
// draws counts integrand evaluations: kShifts independent shifts, each with
// draws / (2·kShifts) lattice points evaluated at w and its antithetic 1 − w
// after the tent (baker) transform.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <tuple>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "skewmix/error.hpp"
#include "skewmix/numerics.hpp"

namespace skewmix {
namespace {

constexpr boost::math::policies::policy<boost::math::policies::promote_double<false>> kDoublePolicy;

constexpr int kShifts = 16;
constexpr std::array<double, kMaxCdfDim> kPrimes = {2.0, 3.0, 5.0, 7.0, 11.0, 13.0};

void check_problem(const Vector& upper, const SpdMatrix& sigma, int draws) {
  if (upper.size() != sigma.dim()) throw Error(ErrorCode::DimensionMismatch, "upper and sigma disagree");
  if (sigma.dim() > kMaxCdfDim) {
    throw Error(ErrorCode::DimensionTooLarge,
                "multivariate CDF supports dim <= " + std::to_string(kMaxCdfDim));
  }
  if (draws < kMinCdfDraws) {
    throw Error(ErrorCode::InvalidArgument, "multivariate CDF needs at least " +
                                                std::to_string(kMinCdfDraws) + " draws");
  }
}

struct Lattice {
  int dims = 0;
  int points = 0;  // per shift
  std::vector<double> shifts;  // kShifts × dims
};

Lattice make_lattice(int dims, int draws, std::uint64_t seed) {
  Lattice lat;
  lat.dims = dims;
  lat.points = std::max(1, draws / (2 * kShifts));
  // Coordinate i of shift s does not depend on dims, so mvt_cdf (one extra
  // chi coordinate last) reuses mvn_cdf's points and tends to it as ν → ∞.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  lat.shifts.resize(static_cast<std::size_t>(kShifts * dims));
  for (int s = 0; s < kShifts; ++s) {
    for (int i = 0; i <= kMaxCdfDim; ++i) {
      const double v = unif(rng);
      if (i < dims) lat.shifts[static_cast<std::size_t>(s * dims + i)] = v;
    }
  }
  return lat;
}

// Visits every evaluation point in a fixed order; visit(index, w) returns
// the integrand value.
template <class Visit>
CdfEstimate integrate(const Lattice& lat, Visit&& visit) {
  std::array<double, kMaxCdfDim + 1> gen{};
  for (int i = 0; i < lat.dims; ++i) gen[i] = std::sqrt(kPrimes[i]) - std::floor(std::sqrt(kPrimes[i]));
  std::array<double, kShifts> means{};
  std::array<double, kMaxCdfDim + 1> x{};
  std::array<double, kMaxCdfDim + 1> w{};
  std::array<double, kMaxCdfDim + 1> wa{};
  std::size_t eval = 0;
  for (int s = 0; s < kShifts; ++s) {
    for (int i = 0; i < lat.dims; ++i) x[i] = lat.shifts[static_cast<std::size_t>(s * lat.dims + i)];
    double acc = 0.0;
    for (int k = 0; k < lat.points; ++k) {
      for (int i = 0; i < lat.dims; ++i) {
        x[i] += gen[i];
        x[i] -= std::floor(x[i]);
        w[i] = std::abs(2.0 * x[i] - 1.0);
        wa[i] = 1.0 - w[i];
      }
      acc += visit(eval++, w.data());
      acc += visit(eval++, wa.data());
    }
    means[s] = acc / (2.0 * lat.points);
  }
  double mean = 0.0;
  for (double m : means) mean += m;
  mean /= kShifts;
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  var /= (kShifts - 1);
  return {mean, std::sqrt(var / kShifts)};
}

// Separation-of-variables integrand for P(L z ≤ b), z ~ N(0, I).
double sov_integrand(const double* b, const Matrix& l, const double* w, int p) {
  std::array<double, kMaxCdfDim> y{};
  double e = norm_cdf(b[0] / l(0, 0));
  double f = e;
  for (int i = 1; i < p; ++i) {
    if (f <= 0.0) return 0.0;
    const double u = std::clamp(w[i - 1] * e, 1e-300, 1.0 - 1e-16);
    y[i - 1] = norm_quantile(u);
    double t = 0.0;
    for (int j = 0; j < i; ++j) t += l(i, j) * y[j];
    e = norm_cdf((b[i] - t) / l(i, i));
    f *= e;
  }
  return f;
}

// Chi scale factors sqrt(χ²_nu / nu) at the last lattice coordinate, cached
// per (nu, dims, draws, seed) because the inverse incomplete gamma dominates
// the cost otherwise.
const std::vector<double>& chi_scales(const Lattice& lat, double nu, int draws, std::uint64_t seed) {
  using Key = std::tuple<double, int, int, std::uint64_t>;
  thread_local std::map<Key, std::vector<double>> cache;
  const Key key{nu, lat.dims, draws, seed};
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  if (cache.size() > 32) cache.clear();
  std::vector<double> scales;
  scales.reserve(static_cast<std::size_t>(2 * kShifts * lat.points));
  integrate(lat, [&](std::size_t, const double* w) {
    const double u = std::clamp(w[lat.dims - 1], 1e-300, 1.0 - 1e-16);
    scales.push_back(std::sqrt(2.0 * boost::math::gamma_p_inv(0.5 * nu, u, kDoublePolicy) / nu));
    return 0.0;
  });
  return cache.emplace(key, std::move(scales)).first->second;
}

}  // namespace

CdfEstimate mvn_cdf(const Vector& upper, const SpdMatrix& sigma, int draws, std::uint64_t seed) {
  check_problem(upper, sigma, draws);
  const int p = sigma.dim();
  const Matrix& l = sigma.lower();
  if (p == 1) return {norm_cdf(upper[0] / l(0, 0)), 0.0};
  const Lattice lat = make_lattice(p - 1, draws, seed);
  return integrate(lat, [&](std::size_t, const double* w) { return sov_integrand(upper.data(), l, w, p); });
}

CdfEstimate mvt_cdf(const Vector& upper, const SpdMatrix& sigma, double nu, int draws,
                    std::uint64_t seed) {
  check_problem(upper, sigma, draws);
  if (!(nu > 0.0)) throw Error(ErrorCode::InvalidDof, "degrees of freedom must be > 0");
  if (std::isinf(nu)) return mvn_cdf(upper, sigma, draws, seed);
  const int p = sigma.dim();
  const Matrix& l = sigma.lower();
  if (p == 1) return {t_cdf(upper[0] / l(0, 0), nu), 0.0};
  // T_p(b; Σ, ν) = E_s[Φ_p(s·b; Σ)] with s = sqrt(χ²_ν / ν).
  const Lattice lat = make_lattice(p, draws, seed);
  const std::vector<double>& scales = chi_scales(lat, nu, draws, seed);
  std::array<double, kMaxCdfDim> scaled{};
  return integrate(lat, [&](std::size_t eval, const double* w) {
    const double s = scales[eval];
    for (int i = 0; i < p; ++i) scaled[i] = upper[i] * s;
    return sov_integrand(scaled.data(), l, w, p);
  });
}

}  // namespace skewmix
