// M-steps. The restricted update maximizes the complete-data Q jointly over
// (μ, δ, Σ̃) in closed form:
//   S_a = Σz·a, S_b = Σz·b, S_c = Σz·c, Y_a = Σz·a·y, Y_b = Σz·b·y
//   μ = (S_c Y_a − S_b Y_b)/det,  δ = (S_a Y_b − S_b Y_a)/det,
//   det = S_a S_c − S_b²
//   Σ̃ = Σz[a rrᵀ − b(rδᵀ + δrᵀ) + c δδᵀ] / Σz,  r = y − μ
// where (a, b, c) = (E[W], E[WU], E[WU²]) for rmst and (1, E[U], E[U²])
// for rmsn. The unrestricted update is the ECM version of the same with
// Δ = diag(δ): μ given δ, then δ given μ, then Σ̃.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "internal.hpp"
#include "skewmix/error.hpp"
#include "skewmix/mixture.hpp"

namespace skewmix {
namespace {

double column_mass(const Matrix& z, int h, int p) {
  const Vector col = z.col(h);
  const double mass = pairwise_sum(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())));
  if (!(mass >= p + 1.0)) {
    throw Error(ErrorCode::DegenerateComponent, "component " + std::to_string(h) + " has responsibility mass " +
                                                    std::to_string(mass) + " < p + 1");
  }
  return mass;
}

// Symmetrizes, and on Cholesky failure retries once with a diagonal jitter
// of 1e-10·trace/p.
SpdMatrix covariance_update(const Matrix& m, int h, const MStepOptions& opts) {
  const Matrix sym = symmetrize(m);
  try {
    return SpdMatrix(sym);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotPositiveDefinite) throw;
  }
  const int p = static_cast<int>(sym.rows());
  const double jitter = 1e-10 * sym.trace() / p;
  if (opts.warnings) {
    opts.warnings->push_back("component " + std::to_string(h) + ": covariance jittered by " + std::to_string(jitter));
  }
  try {
    return SpdMatrix(Matrix(sym + jitter * Matrix::Identity(p, p)));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotPositiveDefinite) throw;
    throw Error(ErrorCode::DegenerateComponent, "component " + std::to_string(h) + " covariance is singular");
  }
}

Vector normalized_weights(const std::vector<double>& mass) {
  Vector w(static_cast<Eigen::Index>(mass.size()));
  for (std::size_t h = 0; h < mass.size(); ++h) w[static_cast<Eigen::Index>(h)] = mass[h];
  return w / w.sum();
}

void check_state(const Matrix& data, const EStepState& state, const MixtureModel& current) {
  if (data.cols() != current.dim()) throw Error(ErrorCode::DimensionMismatch, "data columns != model dimension");
  if (state.z.rows() != data.rows() || state.z.cols() != current.g()) {
    throw Error(ErrorCode::DimensionMismatch, "E-step state does not match data and model");
  }
}

// Observed loglik as a function of one component's ν (or all, if h < 0)
// with every other parameter held at `model`. For restricted components the
// ν-free geometry (d, δᵀΣ⁻¹(y−μ)) is computed once per observation.
class DofProfile {
 public:
  DofProfile(const Matrix& data, const MixtureModel& model, const MStepOptions& opts)
      : data_(data), model_(model), opts_(opts), logw_(weighted_logpdfs(data, model, opts.exec, opts.cdf)) {
    if (is_restricted(model_.family())) {
      const int n = static_cast<int>(data_.rows());
      dist_.resize(n, model_.g());
      arg_.resize(n, model_.g());
      internal::for_rows(n, opts_.exec, [&](int j) {
        for (int k = 0; k < model_.g(); ++k) {
          const RestrictedParams& c = model_.restricted()[k];
          const Vector r = data_.row(j).transpose() - c.mu();
          dist_(j, k) = c.sigma().quad_form_inv(r);
          arg_(j, k) = c.sigma_inv_delta().dot(r);
        }
      });
    }
  }

  double operator()(int h, double nu) const {
    const int n = static_cast<int>(data_.rows());
    const int g = model_.g();
    const Vector log_w = model_.weights().array().log();
    std::vector<std::optional<UnrestrictedParams>> moved(static_cast<std::size_t>(g));
    std::vector<std::optional<RmstKernel>> kernels(static_cast<std::size_t>(g));
    for (int k = 0; k < g; ++k) {
      if (h >= 0 && k != h) continue;
      if (is_restricted(model_.family())) {
        kernels[k].emplace(model_.restricted()[k], nu);
      } else {
        moved[k] = model_.unrestricted()[k].with_nu(nu);
      }
    }
    std::vector<double> rows(static_cast<std::size_t>(n));
    internal::for_rows(n, opts_.exec, [&](int j) {
      std::vector<double> terms(static_cast<std::size_t>(g));
      for (int k = 0; k < g; ++k) {
        if (h >= 0 && k != h) {
          terms[k] = logw_(j, k);
        } else if (is_restricted(model_.family())) {
          terms[k] = log_w[k] + (*kernels[k])(dist_(j, k), arg_(j, k));
        } else {
          terms[k] = log_w[k] + unrestricted_logpdf(data_.row(j).transpose(), *moved[k], opts_.cdf).value;
        }
      }
      rows[j] = logsumexp(terms);
    });
    return pairwise_sum(rows);
  }

  // Commits ν for component h (all when h < 0) and refreshes the cache.
  void set(int h, double nu) {
    std::vector<int> targets;
    if (h < 0) {
      for (int k = 0; k < model_.g(); ++k) targets.push_back(k);
    } else {
      targets.push_back(h);
    }
    if (is_restricted(model_.family())) {
      std::vector<RestrictedParams> c = model_.restricted();
      for (int k : targets) c[k] = c[k].with_nu(nu);
      model_ = MixtureModel(model_.family(), model_.weights(), std::move(c), model_.dof_policy());
    } else {
      std::vector<UnrestrictedParams> c = model_.unrestricted();
      for (int k : targets) c[k] = c[k].with_nu(nu);
      model_ = MixtureModel(model_.family(), model_.weights(), std::move(c), model_.dof_policy());
    }
    logw_ = weighted_logpdfs(data_, model_, opts_.exec, opts_.cdf);
  }

  const MixtureModel& model() const { return model_; }

 private:
  const Matrix& data_;
  MixtureModel model_;
  const MStepOptions& opts_;
  Matrix logw_;
  Matrix dist_, arg_;
};

// Components ordered by weight, then location. Each ν search conditions on
// the ones already updated, so a label-independent order keeps the fit
// equivariant under relabelling.
std::vector<int> canonical_order(const MixtureModel& model) {
  std::vector<int> order(static_cast<std::size_t>(model.g()));
  for (int h = 0; h < model.g(); ++h) order[h] = h;
  const auto location = [&](int h) -> const Vector& {
    return is_restricted(model.family()) ? model.restricted()[h].mu() : model.unrestricted()[h].mu();
  };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (model.weights()[a] != model.weights()[b]) return model.weights()[a] > model.weights()[b];
    const Vector& x = location(a);
    const Vector& y = location(b);
    return std::lexicographical_compare(x.data(), x.data() + x.size(), y.data(), y.data() + y.size());
  });
  return order;
}

MixtureModel ecme_dof(const Matrix& data, const MixtureModel& model, const MStepOptions& opts) {
  DofProfile profile(data, model, opts);
  const bool shared = model.dof_policy() == DofPolicy::shared;
  const std::vector<int> order = shared ? std::vector<int>{-1} : canonical_order(model);
  for (int h : order) {
    const double current = *profile.model().nu(shared ? 0 : h);
    const double candidate = golden_search_log_dof([&](double nu) { return profile(h, nu); });
    // Keep the incumbent unless the search strictly improves on it.
    if (profile(h, candidate) > profile(h, current)) profile.set(h, candidate);
  }
  return profile.model();
}

MixtureModel osl_dof(const EStepState& state, const MixtureModel& model) {
  const int g = model.g();
  std::vector<double> num(static_cast<std::size_t>(g)), den(static_cast<std::size_t>(g));
  for (int h = 0; h < g; ++h) {
    const Vector t = state.z.col(h).cwiseProduct(state.e1.col(h) - state.e2.col(h));
    const Vector z = state.z.col(h);
    num[h] = pairwise_sum(std::span<const double>(t.data(), static_cast<std::size_t>(t.size())));
    den[h] = pairwise_sum(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
    if (!std::isfinite(num[h])) throw Error(ErrorCode::InvalidArgument, "OSL update needs E[log W] in the E-step state");
  }
  std::vector<double> nus(static_cast<std::size_t>(g));
  if (model.dof_policy() == DofPolicy::shared) {
    double a = 0.0, b = 0.0;
    for (int h = 0; h < g; ++h) {
      a += num[h];
      b += den[h];
    }
    nus.assign(static_cast<std::size_t>(g), solve_osl_dof(a / b));
  } else {
    for (int h = 0; h < g; ++h) nus[h] = solve_osl_dof(num[h] / den[h]);
  }
  if (is_restricted(model.family())) {
    std::vector<RestrictedParams> c = model.restricted();
    for (int h = 0; h < g; ++h) c[h] = c[h].with_nu(nus[h]);
    return MixtureModel(model.family(), model.weights(), std::move(c), model.dof_policy());
  }
  std::vector<UnrestrictedParams> c = model.unrestricted();
  for (int h = 0; h < g; ++h) c[h] = c[h].with_nu(nus[h]);
  return MixtureModel(model.family(), model.weights(), std::move(c), model.dof_policy());
}

MixtureModel update_dof(const Matrix& data, const EStepState& state, const MixtureModel& model,
                        const MStepOptions& opts) {
  if (!is_skew_t(model.family()) || model.dof_policy() == DofPolicy::fixed) return model;
  switch (opts.dof_update) {
    case DofUpdate::fixed: return model;
    case DofUpdate::osl: return osl_dof(state, model);
    case DofUpdate::ecme: return ecme_dof(data, model, opts);
  }
  return model;
}

MixtureModel restricted_mstep(const Matrix& data, const EStepState& state, const MixtureModel& current,
                              const MStepOptions& opts, bool skew_t) {
  check_state(data, state, current);
  const int n = static_cast<int>(data.rows());
  const int p = current.dim();
  const int g = current.g();
  std::vector<RestrictedParams> comps;
  std::vector<double> mass;
  for (int h = 0; h < g; ++h) {
    const double zsum = column_mass(state.z, h, p);
    const auto a = [&](int j) { return skew_t ? state.e2(j, h) : 1.0; };
    const auto b = [&](int j) { return skew_t ? state.e3(j, h) : state.e1(j, h); };
    const auto c = [&](int j) { return skew_t ? state.e4(j, h) : state.e2(j, h); };
    // Packed sums: [S_a, S_b, S_c, Y_a (p), Y_b (p)].
    const Matrix sums = internal::pairwise_accumulate(0, n, [&](int j) {
      const double zj = state.z(j, h);
      Matrix t(3 + 2 * p, 1);
      t(0, 0) = zj * a(j);
      t(1, 0) = zj * b(j);
      t(2, 0) = zj * c(j);
      t.block(3, 0, p, 1) = zj * a(j) * data.row(j).transpose();
      t.block(3 + p, 0, p, 1) = zj * b(j) * data.row(j).transpose();
      return t;
    });
    const double sa = sums(0, 0), sb = sums(1, 0), sc = sums(2, 0);
    const Vector ya = sums.block(3, 0, p, 1);
    const Vector yb = sums.block(3 + p, 0, p, 1);
    Vector mu, delta;
    if (opts.freeze_skew) {
      delta = Vector::Zero(p);
      mu = ya / sa;
    } else {
      const double det = sa * sc - sb * sb;
      delta = (sa * yb - sb * ya) / det;
      mu = (sc * ya - sb * yb) / det;
    }
    const Matrix scatter = internal::pairwise_accumulate(0, n, [&](int j) {
      const Vector r = data.row(j).transpose() - mu;
      const Matrix rd = r * delta.transpose();
      return Matrix(state.z(j, h) * (a(j) * r * r.transpose() - b(j) * (rd + rd.transpose()) +
                                     c(j) * delta * delta.transpose()));
    });
    const SpdMatrix sigma_tilde = covariance_update(scatter / zsum, h, opts);
    comps.emplace_back(mu, SpdMatrix(symmetrize(sigma_tilde.matrix() + delta * delta.transpose())), delta,
                       current.nu(h));
    mass.push_back(zsum);
  }
  const MixtureModel updated(current.family(), normalized_weights(mass), std::move(comps), current.dof_policy());
  return update_dof(data, state, updated, opts);
}

}  // namespace

double solve_osl_dof(double mean_logw_minus_w) {
  const auto score = [&](double nu) {
    return 1.0 - boost::math::digamma(0.5 * nu) + std::log(0.5 * nu) + mean_logw_minus_w;
  };
  if (!std::isfinite(mean_logw_minus_w)) throw Error(ErrorCode::DofSolveFailed, "non-finite OSL statistic");
  if (score(kMaxDof) >= 0.0) return kMaxDof;
  if (score(kMinDof) <= 0.0) {
    throw Error(ErrorCode::DofSolveFailed, "OSL score has no root in [0.5, 1000]");
  }
  std::uintmax_t iters = 200;
  const auto [lo, hi] = boost::math::tools::toms748_solve(score, kMinDof, kMaxDof,
                                                          boost::math::tools::eps_tolerance<double>(50), iters);
  return 0.5 * (lo + hi);
}

double golden_search_log_dof(const std::function<double(double)>& f) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::log(kMinDof), b = std::log(kMaxDof);
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = f(std::exp(c)), fd = f(std::exp(d));
  double best_x = fc >= fd ? c : d;
  double best_f = std::max(fc, fd);
  while (b - a > 1e-4) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(std::exp(c));
      if (fc > best_f) best_f = fc, best_x = c;
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(std::exp(d));
      if (fd > best_f) best_f = fd, best_x = d;
    }
  }
  // The interval ends are candidates too (the maximum may sit on a bound).
  for (double edge : {std::log(kMinDof), std::log(kMaxDof)}) {
    const double fe = f(std::exp(edge));
    if (fe > best_f) best_f = fe, best_x = edge;
  }
  if (!std::isfinite(best_f)) throw Error(ErrorCode::DofSolveFailed, "profile loglik is not finite on [0.5, 1000]");
  return std::exp(best_x);
}

MixtureModel mstep_rmsn(const Matrix& data, const EStepState& state, const MixtureModel& current,
                        const MStepOptions& opts) {
  if (current.family() != Family::rmsn) throw Error(ErrorCode::InvalidArgument, "mstep_rmsn on a non-rmsn model");
  return restricted_mstep(data, state, current, opts, false);
}

MixtureModel mstep_rmst(const Matrix& data, const EStepState& state, const MixtureModel& current,
                        const MStepOptions& opts) {
  if (current.family() != Family::rmst) throw Error(ErrorCode::InvalidArgument, "mstep_rmst on a non-rmst model");
  return restricted_mstep(data, state, current, opts, true);
}

MixtureModel mstep_unrestricted(const Matrix& data, const EStepState& state, const MixtureModel& current,
                                const MStepOptions& opts) {
  if (is_restricted(current.family())) throw Error(ErrorCode::InvalidArgument, "mstep_unrestricted on a restricted model");
  check_state(data, state, current);
  const int n = static_cast<int>(data.rows());
  const int p = current.dim();
  const int g = current.g();
  std::vector<UnrestrictedParams> comps;
  std::vector<double> mass;
  for (int h = 0; h < g; ++h) {
    const double zsum = column_mass(state.z, h, p);
    const UnrestrictedParams& old = current.unrestricted()[h];
    const Vector old_delta = old.delta();
    const Matrix& e3 = state.ue3.at(h);
    const Matrix& e4 = state.ue4.at(h);
    const auto e4_at = [&](int j) {
      Matrix m(p, p);
      for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b) m(a, b) = e4(j, a * p + b);
      return m;
    };
    // μ given δ_old.
    const Matrix mu_sums = internal::pairwise_accumulate(0, n, [&](int j) {
      const double zj = state.z(j, h);
      Matrix t(p + 1, 1);
      t(0, 0) = zj * state.e2(j, h);
      t.block(1, 0, p, 1) =
          zj * (state.e2(j, h) * data.row(j).transpose() - old_delta.cwiseProduct(e3.row(j).transpose()));
      return t;
    });
    const Vector mu = mu_sums.block(1, 0, p, 1) / mu_sums(0, 0);
    // δ given μ, with the old Σ̃ in the weights.
    Vector delta = Vector::Zero(p);
    if (!opts.freeze_skew) {
      const SpdMatrix old_tilde(symmetrize(old.sigma().matrix() - Matrix(old_delta.cwiseAbs2().asDiagonal())));
      const Matrix a_inv = old_tilde.inverse();
      const Matrix lhs = internal::pairwise_accumulate(0, n, [&](int j) {
        return Matrix(state.z(j, h) * a_inv.cwiseProduct(e4_at(j)));
      });
      const Matrix rhs = internal::pairwise_accumulate(0, n, [&](int j) {
        const Vector r = data.row(j).transpose() - mu;
        return Matrix(state.z(j, h) * e3.row(j).transpose().cwiseProduct(a_inv * r));
      });
      delta = SpdMatrix(symmetrize(lhs)).solve(Vector(rhs.col(0)));
    }
    const Matrix scatter = internal::pairwise_accumulate(0, n, [&](int j) {
      const Vector r = data.row(j).transpose() - mu;
      const Vector de3 = delta.cwiseProduct(e3.row(j).transpose());
      const Matrix cross = r * de3.transpose();
      return Matrix(state.z(j, h) * (state.e2(j, h) * r * r.transpose() - cross - cross.transpose() +
                                     delta.asDiagonal() * e4_at(j) * delta.asDiagonal()));
    });
    const SpdMatrix sigma_tilde = covariance_update(scatter / zsum, h, opts);
    comps.emplace_back(mu, SpdMatrix(symmetrize(sigma_tilde.matrix() + Matrix(delta.cwiseAbs2().asDiagonal()))),
                       delta, old.nu());
    mass.push_back(zsum);
  }
  const MixtureModel updated(current.family(), normalized_weights(mass), std::move(comps), current.dof_policy());
  return update_dof(data, state, updated, opts);
}

MixtureModel mstep(const Matrix& data, const EStepState& state, const MixtureModel& current,
                   const MStepOptions& opts) {
  switch (current.family()) {
    case Family::rmsn: return mstep_rmsn(data, state, current, opts);
    case Family::rmst: return mstep_rmst(data, state, current, opts);
    case Family::umsn:
    case Family::umst: return mstep_unrestricted(data, state, current, opts);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown family");
}

}  // namespace skewmix
