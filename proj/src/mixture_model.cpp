#include <cmath>
#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "internal.hpp"
#include "skewmix/error.hpp"
#include "skewmix/mixture.hpp"

namespace skewmix {

std::string_view to_string(Family f) {
  switch (f) {
    case Family::rmsn: return "rmsn";
    case Family::rmst: return "rmst";
    case Family::umsn: return "umsn";
    case Family::umst: return "umst";
  }
  return "?";
}

Family family_from_string(std::string_view name) {
  if (name == "rmsn") return Family::rmsn;
  if (name == "rmst") return Family::rmst;
  if (name == "umsn") return Family::umsn;
  if (name == "umst") return Family::umst;
  throw Error(ErrorCode::InvalidArgument, "unknown family '" + std::string(name) + "'");
}

std::string_view to_string(DofUpdate d) {
  switch (d) {
    case DofUpdate::osl: return "osl";
    case DofUpdate::ecme: return "ecme";
    case DofUpdate::fixed: return "fixed";
  }
  return "?";
}

DofUpdate dof_update_from_string(std::string_view name) {
  if (name == "osl") return DofUpdate::osl;
  if (name == "ecme") return DofUpdate::ecme;
  if (name == "fixed") return DofUpdate::fixed;
  throw Error(ErrorCode::InvalidArgument, "unknown dof update '" + std::string(name) + "'");
}

bool is_restricted(Family f) { return f == Family::rmsn || f == Family::rmst; }
bool is_skew_t(Family f) { return f == Family::rmst || f == Family::umst; }

MixtureModel::MixtureModel(Family family, Vector weights, std::vector<RestrictedParams> components,
                           DofPolicy dof_policy)
    : family_(family), weights_(std::move(weights)), restricted_(std::move(components)), dof_policy_(dof_policy) {
  if (!is_restricted(family_)) throw Error(ErrorCode::InvalidArgument, "restricted components for an unrestricted family");
  validate();
}

MixtureModel::MixtureModel(Family family, Vector weights, std::vector<UnrestrictedParams> components,
                           DofPolicy dof_policy)
    : family_(family), weights_(std::move(weights)), unrestricted_(std::move(components)), dof_policy_(dof_policy) {
  if (is_restricted(family_)) throw Error(ErrorCode::InvalidArgument, "unrestricted components for a restricted family");
  validate();
}

void MixtureModel::validate() const {
  const std::size_t g = static_cast<std::size_t>(weights_.size());
  const std::size_t count = is_restricted(family_) ? restricted_.size() : unrestricted_.size();
  if (g == 0) throw Error(ErrorCode::EmptyInput, "mixture needs at least one component");
  if (count != g) throw Error(ErrorCode::DimensionMismatch, "weights and components disagree in number");
  if ((weights_.array() < 0.0).any() || !weights_.allFinite() || std::abs(weights_.sum() - 1.0) > 1e-10) {
    throw Error(ErrorCode::InvalidArgument, "mixing weights must be nonnegative and sum to 1");
  }
  for (int h = 0; h < static_cast<int>(g); ++h) {
    const int p = is_restricted(family_) ? restricted_[h].dim() : unrestricted_[h].dim();
    if (p != dim()) throw Error(ErrorCode::DimensionMismatch, "components have different dimensions");
    if (nu(h).has_value() != is_skew_t(family_)) {
      throw Error(ErrorCode::InvalidArgument, "degrees of freedom must be present exactly for skew t families");
    }
  }
  if (dof_policy_ == DofPolicy::shared && is_skew_t(family_)) {
    for (int h = 1; h < static_cast<int>(g); ++h) {
      if (*nu(h) != *nu(0)) throw Error(ErrorCode::InvalidArgument, "shared dof policy with differing nu");
    }
  }
}

int MixtureModel::dim() const {
  return is_restricted(family_) ? restricted_.front().dim() : unrestricted_.front().dim();
}

std::optional<double> MixtureModel::nu(int h) const {
  return is_restricted(family_) ? restricted_.at(h).nu() : unrestricted_.at(h).nu();
}

double MixtureModel::component_logpdf(const Vector& y, int h, const CdfOptions& cdf) const {
  if (is_restricted(family_)) return restricted_logpdf(y, restricted_.at(h));
  return unrestricted_logpdf(y, unrestricted_.at(h), cdf).value;
}

MixtureModel MixtureModel::permuted(const std::vector<int>& perm) const {
  if (static_cast<int>(perm.size()) != g()) throw Error(ErrorCode::LengthMismatch, "permutation length != g");
  Vector w(g());
  for (int h = 0; h < g(); ++h) w[h] = weights_[perm[h]];
  if (is_restricted(family_)) {
    std::vector<RestrictedParams> c;
    for (int h : perm) c.push_back(restricted_.at(h));
    return MixtureModel(family_, w, std::move(c), dof_policy_);
  }
  std::vector<UnrestrictedParams> c;
  for (int h : perm) c.push_back(unrestricted_.at(h));
  return MixtureModel(family_, w, std::move(c), dof_policy_);
}

MixtureModel MixtureModel::with_dof_policy(DofPolicy policy) const {
  if (is_restricted(family_)) return MixtureModel(family_, weights_, restricted_, policy);
  return MixtureModel(family_, weights_, unrestricted_, policy);
}

MixtureSample sample_mixture(const MixtureModel& model, int n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "sample size must be >= 1");
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32), 0xc0ffeeu};
  std::mt19937_64 rng(seq);
  std::discrete_distribution<int> pick(model.weights().data(), model.weights().data() + model.g());
  std::vector<int> counts(static_cast<std::size_t>(model.g()), 0);
  for (int i = 0; i < n; ++i) ++counts[pick(rng)];
  MixtureSample out{Matrix(n, model.dim()), std::vector<int>(static_cast<std::size_t>(n))};
  int row = 0;
  for (int h = 0; h < model.g(); ++h) {
    if (counts[h] == 0) continue;
    const std::uint64_t sub = internal::mix64(seed ^ internal::mix64(static_cast<std::uint64_t>(h) + 1));
    const SampleBatch b = is_restricted(model.family())
                              ? sample(model.restricted()[h], counts[h], Representation::convolution, sub)
                              : sample(model.unrestricted()[h], counts[h], Representation::convolution, sub);
    out.rows.middleRows(row, counts[h]) = b.rows;
    std::fill_n(out.labels.begin() + row, counts[h], h);
    row += counts[h];
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  MixtureSample shuffled{Matrix(n, model.dim()), std::vector<int>(static_cast<std::size_t>(n))};
  for (int i = 0; i < n; ++i) {
    shuffled.rows.row(i) = out.rows.row(order[i]);
    shuffled.labels[i] = out.labels[order[i]];
  }
  return shuffled;
}

double mixture_logpdf(const Vector& y, const MixtureModel& model, const CdfOptions& cdf) {
  std::vector<double> terms(static_cast<std::size_t>(model.g()));
  for (int h = 0; h < model.g(); ++h) {
    terms[h] = std::log(model.weights()[h]) + model.component_logpdf(y, h, cdf);
  }
  return logsumexp(terms);
}

Matrix weighted_logpdfs(const Matrix& data, const MixtureModel& model, Exec exec, const CdfOptions& cdf) {
  if (data.cols() != model.dim()) throw Error(ErrorCode::DimensionMismatch, "data columns != model dimension");
  const int n = static_cast<int>(data.rows());
  const int g = model.g();
  const Vector log_w = model.weights().array().log();
  Matrix out(n, g);
  internal::for_rows(n, exec, [&](int j) {
    const Vector y = data.row(j).transpose();
    for (int h = 0; h < g; ++h) out(j, h) = log_w[h] + model.component_logpdf(y, h, cdf);
  });
  return out;
}

namespace internal {

Matrix normalize_rows(const Matrix& log_weighted, Vector& row_log) {
  const int n = static_cast<int>(log_weighted.rows());
  const int g = static_cast<int>(log_weighted.cols());
  Matrix z(n, g);
  row_log.resize(n);
  std::vector<double> buf(static_cast<std::size_t>(g));
  for (int j = 0; j < n; ++j) {
    for (int h = 0; h < g; ++h) buf[h] = log_weighted(j, h);
    const double lse = logsumexp(buf);
    if (!std::isfinite(lse)) {
      throw Error(ErrorCode::AllZeroLikelihood, "observation " + std::to_string(j) + " has zero density under every component");
    }
    row_log[j] = lse;
    for (int h = 0; h < g; ++h) z(j, h) = std::exp(buf[h] - lse);
    // Renormalize so rows sum to 1 to rounding.
    z.row(j) /= z.row(j).sum();
  }
  return z;
}

}  // namespace internal

double loglik(const Matrix& data, const MixtureModel& model, Exec exec, const CdfOptions& cdf) {
  Vector row_log;
  internal::normalize_rows(weighted_logpdfs(data, model, exec, cdf), row_log);
  return pairwise_sum(std::span<const double>(row_log.data(), static_cast<std::size_t>(row_log.size())));
}

Matrix responsibilities(const Matrix& data, const MixtureModel& model, Exec exec, const CdfOptions& cdf) {
  Vector row_log;
  return internal::normalize_rows(weighted_logpdfs(data, model, exec, cdf), row_log);
}

}  // namespace skewmix
