#pragma once

// Finite mixtures of restricted or unrestricted skew normal / skew t
// components, fitted by EM.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skewmix/numerics.hpp"
#include "skewmix/params.hpp"
#include "skewmix/skewdist.hpp"

namespace skewmix {

enum class Family { rmsn, rmst, umsn, umst };
enum class DofPolicy { per_component, shared, fixed };
enum class DofUpdate { osl, ecme, fixed };
enum class InitStrategy { kmeans, random_starts };
/// E-step loop driver. Both produce bit-identical results; serial is the
/// reference the parallel kernel is tested against.
enum class Exec { serial, parallel };

std::string_view to_string(Family f);
Family family_from_string(std::string_view name);
std::string_view to_string(DofUpdate d);
DofUpdate dof_update_from_string(std::string_view name);

bool is_restricted(Family f);
bool is_skew_t(Family f);

/// Weights plus one parameter set per component. Restricted families keep
/// their components in restricted(), unrestricted ones in unrestricted().
class MixtureModel {
 public:
  MixtureModel(Family family, Vector weights, std::vector<RestrictedParams> components,
               DofPolicy dof_policy = DofPolicy::per_component);
  MixtureModel(Family family, Vector weights, std::vector<UnrestrictedParams> components,
               DofPolicy dof_policy = DofPolicy::per_component);

  Family family() const { return family_; }
  DofPolicy dof_policy() const { return dof_policy_; }
  int g() const { return static_cast<int>(weights_.size()); }
  int dim() const;
  const Vector& weights() const { return weights_; }
  const std::vector<RestrictedParams>& restricted() const { return restricted_; }
  const std::vector<UnrestrictedParams>& unrestricted() const { return unrestricted_; }
  std::optional<double> nu(int h) const;

  /// log f(y; θ_h), without the weight.
  double component_logpdf(const Vector& y, int h, const CdfOptions& cdf = {}) const;

  /// Component h of the result is component perm[h] of this model.
  MixtureModel permuted(const std::vector<int>& perm) const;
  MixtureModel with_dof_policy(DofPolicy policy) const;

 private:
  void validate() const;

  Family family_;
  Vector weights_;
  std::vector<RestrictedParams> restricted_;
  std::vector<UnrestrictedParams> unrestricted_;
  DofPolicy dof_policy_;
};

struct MixtureSample {
  Matrix rows;
  std::vector<int> labels;  // generating component per row
};

/// Draws component counts, samples each component by convolution, then
/// shuffles rows. Deterministic per seed.
MixtureSample sample_mixture(const MixtureModel& model, int n, std::uint64_t seed);

double mixture_logpdf(const Vector& y, const MixtureModel& model, const CdfOptions& cdf = {});

/// n×g matrix of log π_h + log f(y_j; θ_h).
Matrix weighted_logpdfs(const Matrix& data, const MixtureModel& model, Exec exec = Exec::parallel,
                        const CdfOptions& cdf = {});

/// Σ_j log f(y_j; Ψ), pairwise-summed.
double loglik(const Matrix& data, const MixtureModel& model, Exec exec = Exec::parallel, const CdfOptions& cdf = {});

/// Posterior membership probabilities z_hj, normalized in log space.
/// Throws AllZeroLikelihood if some row has zero density under every
/// component.
Matrix responsibilities(const Matrix& data, const MixtureModel& model, Exec exec = Exec::parallel,
                        const CdfOptions& cdf = {});

/// Conditional expectations given y_j and membership of component h.
///
/// rmsn:  e1 = E[U], e2 = E[U²].
/// rmst:  e1 = E[log W], e2 = E[W], e3 = E[WU], e4 = E[WU²].
/// umsn/umst: e1 = E[log W], e2 = E[W] (0 and 1 for umsn); the vector
/// moments E[WU] and E[WUUᵀ] sit in ue3[h] (n×p) and ue4[h] (n×p², row-major).
///
/// se1/se2/ue3_se hold Monte-Carlo standard errors (MC E-step only).
struct EStepState {
  Matrix z;
  Matrix e1, e2, e3, e4;
  std::vector<Matrix> ue3, ue4;
  Matrix se1, se2;
  std::vector<Matrix> ue3_se;
  double loglik = 0.0;
};

/// How estep_rmst fills e1 = E[log W | y].
enum class LogWeight {
  exact,          // one-dimensional quadrature over the posterior of W
  one_step_late,  // plug-in approximation used by the OSL update
  none,           // left as NaN (not needed by ECME or fixed ν)
};

EStepState estep_rmsn(const Matrix& data, const MixtureModel& model, Exec exec = Exec::parallel);
EStepState estep_rmst(const Matrix& data, const MixtureModel& model, LogWeight log_weight = LogWeight::exact,
                      Exec exec = Exec::parallel);

struct McOptions {
  int draws = 10000;
  std::uint64_t seed = 1;
  /// Mixed into every per-row stream so successive EM iterations draw
  /// fresh samples.
  int iteration = 0;
  CdfOptions cdf;
};

inline constexpr int kMaxMcDim = 4;
inline constexpr double kMinEffectiveSampleSize = 100.0;

/// Importance-sampled E-step for umsn/umst. Throws DimensionTooLarge for
/// p > kMaxMcDim and EffectiveSampleSizeTooLow when a row's importance
/// weights collapse.
EStepState estep_umst_mc(const Matrix& data, const MixtureModel& model, const McOptions& opts = {},
                         Exec exec = Exec::parallel);

/// Dispatches on the family.
EStepState estep(const Matrix& data, const MixtureModel& model, DofUpdate dof_update, const McOptions& mc,
                 Exec exec = Exec::parallel);

struct MStepOptions {
  DofUpdate dof_update = DofUpdate::ecme;
  /// Keep δ at zero (the update then reduces to the Gaussian/t mixture MLE).
  bool freeze_skew = false;
  CdfOptions cdf;
  Exec exec = Exec::parallel;
  /// Receives a line per covariance jitter event, if non-null.
  std::vector<std::string>* warnings = nullptr;
};

inline constexpr double kMinDof = 0.5;
inline constexpr double kMaxDof = 1000.0;

MixtureModel mstep_rmsn(const Matrix& data, const EStepState& state, const MixtureModel& current,
                        const MStepOptions& opts = {});
MixtureModel mstep_rmst(const Matrix& data, const EStepState& state, const MixtureModel& current,
                        const MStepOptions& opts = {});
MixtureModel mstep_unrestricted(const Matrix& data, const EStepState& state, const MixtureModel& current,
                                const MStepOptions& opts = {});
MixtureModel mstep(const Matrix& data, const EStepState& state, const MixtureModel& current,
                   const MStepOptions& opts = {});

/// Root of 1 − ψ(ν/2) + log(ν/2) + mean_logw_minus_w = 0 on
/// [kMinDof, kMaxDof]; clamps to kMaxDof when the score is still positive
/// there, throws DofSolveFailed when it is already negative at kMinDof.
double solve_osl_dof(double mean_logw_minus_w);

/// Maximizes f over ν ∈ [kMinDof, kMaxDof] by golden-section search in
/// log ν (tolerance 1e-4), returning the best point visited.
double golden_search_log_dof(const std::function<double(double)>& f);

inline constexpr int kInitStarts = 5;

MixtureModel init_params(const Matrix& data, int g, Family family, InitStrategy strategy, std::uint64_t seed,
                         int random_starts = kInitStarts, const CdfOptions& cdf = {});

struct FitOptions {
  int max_iter = 500;
  /// Relative loglik change threshold; 0 runs exactly max_iter iterations,
  /// +∞ returns right after initialization.
  double tol = 1e-8;
  InitStrategy init = InitStrategy::kmeans;
  int random_starts = kInitStarts;
  DofUpdate dof_update = DofUpdate::ecme;
  DofPolicy dof_policy = DofPolicy::per_component;
  std::uint64_t seed = 1;
  int mc_draws = 10000;
  bool freeze_skew = false;
  CdfOptions cdf;
  Exec exec = Exec::parallel;
  /// Starting point; replaces init when present.
  std::optional<MixtureModel> initial_model;
};

struct FitReport {
  MixtureModel model;
  std::vector<double> loglik_trace;
  int iterations = 0;
  bool converged = false;
  Matrix responsibilities;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

FitReport fit_em(const Matrix& data, int g, Family family, const FitOptions& opts = {});

}  // namespace skewmix
