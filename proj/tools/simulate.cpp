// Writes the synthetic three-component trivariate skew t data set with a
// label column and a dead-cell flag column.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "skewmix/mixture.hpp"
#include "synthetic_model.hpp"

int main(int argc, char** argv) {
  using namespace skewmix;
  CLI::App app{"Generate the synthetic skew t mixture data set"};
  std::string out = "synthetic_dlbcl.csv";
  std::uint64_t seed = 2013;
  int n = synthetic::kCytometryRows;
  app.add_option("--out", out, "output CSV path");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--n", n, "number of rows")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const MixtureSample s = sample_mixture(synthetic::cytometry_model(), n, seed);
  std::mt19937_64 rng(seed ^ 0xdeadULL);
  std::bernoulli_distribution dead(synthetic::kDeadFraction);
  std::ofstream f(out);
  if (!f) {
    std::cerr << "cannot write " << out << "\n";
    return 1;
  }
  f << "marker1,marker2,marker3,label,dead\n";
  char buf[128];
  for (int j = 0; j < n; ++j) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%d,%d\n", s.rows(j, 0), s.rows(j, 1), s.rows(j, 2), s.labels[j],
                  dead(rng) ? 1 : 0);
    f << buf;
  }
  return 0;
}
