#include <cmath>
#include <limits>
#include <string>

#include "skewmix/error.hpp"
#include "skewmix/mixture.hpp"

namespace skewmix {

FitReport fit_em(const Matrix& data, int g, Family family, const FitOptions& opts) {
  const int n = static_cast<int>(data.rows());
  const int p = static_cast<int>(data.cols());
  if (g < 1) throw Error(ErrorCode::InvalidArgument, "g must be >= 1");
  if (n == 0) throw Error(ErrorCode::EmptyInput, "no observations");
  if (n <= g * (p + 1)) {
    throw Error(ErrorCode::InvalidArgument, "need n > g(p + 1) observations, got n = " + std::to_string(n));
  }
  if (!(opts.tol >= 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be >= 0");
  if (opts.max_iter < 0) throw Error(ErrorCode::InvalidArgument, "max_iter must be >= 0");

  MixtureModel model = [&] {
    if (opts.initial_model) {
      const MixtureModel& m = *opts.initial_model;
      if (m.family() != family || m.g() != g || m.dim() != p) {
        throw Error(ErrorCode::InvalidArgument, "initial model does not match family, g or dimension");
      }
      return m;
    }
    return init_params(data, g, family, opts.init, opts.seed, opts.random_starts, opts.cdf)
        .with_dof_policy(opts.dof_policy);
  }();

  FitReport report{model, {}, 0, false, Matrix(), opts.seed, {}};
  McOptions mc{opts.mc_draws, opts.seed, 0, opts.cdf};
  MStepOptions mopts{opts.dof_update, opts.freeze_skew, opts.cdf, opts.exec, &report.warnings};

  EStepState state = estep(data, model, opts.dof_update, mc, opts.exec);
  report.loglik_trace.push_back(state.loglik);
  if (std::isinf(opts.tol)) {
    report.converged = true;
  } else {
    for (int it = 1; it <= opts.max_iter; ++it) {
      model = mstep(data, state, model, mopts);
      mc.iteration = it;
      state = estep(data, model, opts.dof_update, mc, opts.exec);
      const double prev = report.loglik_trace.back();
      report.loglik_trace.push_back(state.loglik);
      if (std::abs(state.loglik - prev) / (std::abs(prev) + 1.0) < opts.tol) {
        report.converged = true;
        break;
      }
    }
  }
  report.model = model;
  report.iterations = static_cast<int>(report.loglik_trace.size()) - 1;
  report.responsibilities = state.z;
  return report;
}

}  // namespace skewmix
