// Starting values. A hard partition (k-means++ then Lloyd, or a single
// nearest-center pass from random data points) gives per-cluster moments,
// from which δ is recovered by inverting the univariate skew normal
// skewness coordinatewise.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "skewmix/error.hpp"
#include "skewmix/mixture.hpp"

namespace skewmix {
namespace {

constexpr int kMaxReseeds = 10;
constexpr int kLloydIterations = 100;
constexpr int kKmeansRestarts = 10;
constexpr double kInitDof = 30.0;
constexpr double kShrink = 0.9;
// Largest attainable |skewness| of a univariate skew normal is ~0.9953.
constexpr double kMaxSkewness = 0.99;

using Rng = std::mt19937_64;

Rng attempt_rng(std::uint64_t seed, int attempt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(attempt)};
  return Rng(seq);
}

std::vector<int> nearest(const Matrix& data, const Matrix& centers) {
  const int n = static_cast<int>(data.rows());
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    Eigen::Index best;
    (centers.rowwise() - data.row(j)).rowwise().squaredNorm().minCoeff(&best);
    labels[j] = static_cast<int>(best);
  }
  return labels;
}

Matrix kmeanspp_centers(const Matrix& data, int g, Rng& rng) {
  const int n = static_cast<int>(data.rows());
  Matrix centers(g, data.cols());
  std::uniform_int_distribution<int> pick(0, n - 1);
  centers.row(0) = data.row(pick(rng));
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  for (int k = 1; k < g; ++k) {
    for (int j = 0; j < n; ++j) d2[j] = std::min(d2[j], (data.row(j) - centers.row(k - 1)).squaredNorm());
    std::discrete_distribution<int> next(d2.begin(), d2.end());
    centers.row(k) = data.row(next(rng));
  }
  return centers;
}

std::vector<int> lloyd(const Matrix& data, int g, Rng& rng, double& within) {
  Matrix centers = kmeanspp_centers(data, g, rng);
  std::vector<int> labels = nearest(data, centers);
  for (int it = 0; it < kLloydIterations; ++it) {
    Matrix sums = Matrix::Zero(g, data.cols());
    Vector counts = Vector::Zero(g);
    for (int j = 0; j < data.rows(); ++j) {
      sums.row(labels[j]) += data.row(j);
      counts[labels[j]] += 1.0;
    }
    for (int k = 0; k < g; ++k) {
      if (counts[k] > 0) centers.row(k) = sums.row(k) / counts[k];
    }
    std::vector<int> next = nearest(data, centers);
    if (next == labels) break;
    labels = std::move(next);
  }
  within = 0.0;
  for (int j = 0; j < data.rows(); ++j) within += (data.row(j) - centers.row(labels[j])).squaredNorm();
  return labels;
}

// Best of several k-means++ / Lloyd runs by within-cluster sum of squares.
std::vector<int> kmeans(const Matrix& data, int g, Rng& rng) {
  std::vector<int> best;
  double best_within = std::numeric_limits<double>::infinity();
  for (int r = 0; r < kKmeansRestarts; ++r) {
    double within = 0.0;
    std::vector<int> labels = lloyd(data, g, rng, within);
    if (within < best_within) {
      best_within = within;
      best = std::move(labels);
    }
  }
  return best;
}

std::vector<int> random_partition(const Matrix& data, int g, Rng& rng) {
  const int n = static_cast<int>(data.rows());
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) idx[j] = j;
  std::shuffle(idx.begin(), idx.end(), rng);
  Matrix centers(g, data.cols());
  for (int k = 0; k < g; ++k) centers.row(k) = data.row(idx[k]);
  return nearest(data, centers);
}

// δ_i from the sample skewness of coordinate i, shrunk to zero when the
// skewness is within three standard errors (√(6/n)) of zero.
double skewness_to_delta(double skew, double var, int n) {
  const double se = std::sqrt(6.0 / n);
  double s = std::copysign(std::max(0.0, std::abs(skew) - 3.0 * se), skew);
  s = std::clamp(s, -kMaxSkewness, kMaxSkewness);
  // γ = (4−π)/2 · r³ with r = bδ*/√(1 − b²δ*²), b = √(2/π).
  const double b = std::sqrt(2.0 / std::numbers::pi);
  const double r = std::cbrt(2.0 * std::abs(s) / (4.0 - std::numbers::pi));
  const double dstar = std::copysign(r / (b * std::sqrt(1.0 + r * r)), s);
  const double omega = std::sqrt(var / (1.0 - b * b * dstar * dstar));
  return dstar * omega;
}

struct ClusterMoments {
  Vector mean;
  Matrix cov;
  Vector delta;
  double weight;
};

ClusterMoments moments(const Matrix& data, const std::vector<int>& labels, int k) {
  const int p = static_cast<int>(data.cols());
  std::vector<int> rows;
  for (int j = 0; j < data.rows(); ++j)
    if (labels[j] == k) rows.push_back(j);
  const int m = static_cast<int>(rows.size());
  if (m < p + 1) throw Error(ErrorCode::InitFailed, "cluster " + std::to_string(k) + " has fewer than p + 1 points");
  Matrix x(m, p);
  for (int i = 0; i < m; ++i) x.row(i) = data.row(rows[i]);
  ClusterMoments out;
  out.mean = x.colwise().mean().transpose();
  const Matrix c = x.rowwise() - out.mean.transpose();
  out.cov = symmetrize(c.transpose() * c / m);
  out.delta.resize(p);
  for (int i = 0; i < p; ++i) {
    const double m2 = out.cov(i, i);
    const double m3 = c.col(i).array().cube().mean();
    out.delta[i] = skewness_to_delta(m3 / std::pow(m2, 1.5), m2, m);
  }
  out.weight = static_cast<double>(m) / data.rows();
  return out;
}

MixtureModel build_model(const Matrix& data, const std::vector<int>& labels, int g, Family family) {
  const double c = 1.0 - 2.0 / std::numbers::pi;
  const double b = std::sqrt(2.0 / std::numbers::pi);
  const std::optional<double> nu = is_skew_t(family) ? std::optional<double>(kInitDof) : std::nullopt;
  Vector weights(g);
  std::vector<RestrictedParams> restricted;
  std::vector<UnrestrictedParams> unrestricted;
  for (int k = 0; k < g; ++k) {
    ClusterMoments mo = moments(data, labels, k);
    weights[k] = mo.weight;
    const auto skew_outer = [&](const Vector& d) {
      return is_restricted(family) ? Matrix(d * d.transpose()) : Matrix(d.cwiseAbs2().asDiagonal());
    };
    // Shrink δ until Σ̃ = S − (1 − 2/π)·(δδᵀ or Δ²) is positive definite.
    std::optional<SpdMatrix> tilde;
    for (int s = 0; s < 200 && !tilde; ++s) {
      try {
        tilde.emplace(symmetrize(mo.cov - c * skew_outer(mo.delta)));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NotPositiveDefinite) throw;
        mo.delta *= kShrink;
      }
    }
    if (!tilde) throw Error(ErrorCode::InitFailed, "cluster covariance is singular");
    const Vector mu = mo.mean - b * mo.delta;
    SpdMatrix sigma(symmetrize(tilde->matrix() + skew_outer(mo.delta)));
    if (is_restricted(family)) {
      restricted.emplace_back(mu, std::move(sigma), mo.delta, nu);
    } else {
      unrestricted.emplace_back(mu, std::move(sigma), mo.delta, nu);
    }
  }
  weights /= weights.sum();
  if (is_restricted(family)) return MixtureModel(family, weights, std::move(restricted));
  return MixtureModel(family, weights, std::move(unrestricted));
}

}  // namespace

MixtureModel init_params(const Matrix& data, int g, Family family, InitStrategy strategy, std::uint64_t seed,
                         int random_starts, const CdfOptions& cdf) {
  const int n = static_cast<int>(data.rows());
  if (g < 1) throw Error(ErrorCode::InvalidArgument, "g must be >= 1");
  if (n < g) throw Error(ErrorCode::InvalidArgument, "fewer observations than components");
  if (!data.allFinite()) throw Error(ErrorCode::MissingValue, "data contains non-finite values");
  const int starts = strategy == InitStrategy::kmeans ? 1 : std::max(1, random_starts);
  std::optional<MixtureModel> best;
  double best_ll = -std::numeric_limits<double>::infinity();
  int attempt = 0;
  std::string last_error;
  for (int start = 0; start < starts; ++start) {
    for (int tries = 0; tries <= kMaxReseeds; ++tries, ++attempt) {
      Rng rng = attempt_rng(seed, attempt);
      try {
        const std::vector<int> labels =
            strategy == InitStrategy::kmeans ? kmeans(data, g, rng) : random_partition(data, g, rng);
        MixtureModel model = build_model(data, labels, g, family);
        const double ll = starts > 1 ? loglik(data, model, Exec::parallel, cdf) : 0.0;
        if (!best || ll > best_ll) {
          best = std::move(model);
          best_ll = ll;
        }
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::InitFailed && e.code() != ErrorCode::NotPositiveDefinite &&
            e.code() != ErrorCode::InfeasibleSkewness && e.code() != ErrorCode::AllZeroLikelihood) {
          throw;
        }
        last_error = e.what();
      }
    }
  }
  if (!best) throw Error(ErrorCode::InitFailed, "initialization failed after reseeding: " + last_error);
  return *best;
}

}  // namespace skewmix
