// Serial reference vs OpenMP E-step kernels on the synthetic skew t data.

#include <benchmark/benchmark.h>

#include "skewmix/mixture.hpp"
#include "../tools/synthetic_model.hpp"

namespace {

using namespace skewmix;

const MixtureSample& data() {
  static const MixtureSample s = sample_mixture(synthetic::cytometry_model(), 20000, 7);
  return s;
}

void BM_EStepRmst(benchmark::State& state) {
  const Exec exec = state.range(0) == 0 ? Exec::serial : Exec::parallel;
  const MixtureModel model = synthetic::cytometry_model();
  for (auto _ : state) {
    EStepState s = estep_rmst(data().rows, model, LogWeight::one_step_late, exec);
    benchmark::DoNotOptimize(s.loglik);
  }
  state.SetItemsProcessed(state.iterations() * data().rows.rows());
}
BENCHMARK(BM_EStepRmst)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_EStepRmstExactLogW(benchmark::State& state) {
  const Exec exec = state.range(0) == 0 ? Exec::serial : Exec::parallel;
  const MixtureModel model = synthetic::cytometry_model();
  for (auto _ : state) {
    EStepState s = estep_rmst(data().rows, model, LogWeight::exact, exec);
    benchmark::DoNotOptimize(s.loglik);
  }
  state.SetItemsProcessed(state.iterations() * data().rows.rows());
}
BENCHMARK(BM_EStepRmstExactLogW)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_EStepUmstMc(benchmark::State& state) {
  const Exec exec = state.range(0) == 0 ? Exec::serial : Exec::parallel;
  std::vector<UnrestrictedParams> comps;
  Matrix sigma(2, 2);
  sigma << 1.0, 0.3, 0.3, 1.0;
  Vector mu(2), delta(2);
  mu << 0.0, 0.0;
  delta << 0.6, -0.4;
  comps.emplace_back(mu, SpdMatrix(sigma), delta, 6.0);
  const MixtureModel model(Family::umst, Vector::Ones(1), std::move(comps));
  const Matrix y = sample_mixture(model, 64, 3).rows;
  McOptions mc;
  for (auto _ : state) {
    EStepState s = estep_umst_mc(y, model, mc, exec);
    benchmark::DoNotOptimize(s.loglik);
  }
  state.SetItemsProcessed(state.iterations() * y.rows());
}
BENCHMARK(BM_EStepUmstMc)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
