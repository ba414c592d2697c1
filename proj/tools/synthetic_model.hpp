#pragma once

// Generating model for the bundled synthetic three-marker data set:
// three trivariate restricted skew t components with ν = 4, 7, 15.

#include <vector>

#include "skewmix/mixture.hpp"

namespace skewmix::synthetic {

inline MixtureModel cytometry_model() {
  const auto mat = [](std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
    Eigen::Index i = 0;
    for (const auto& r : rows) {
      Eigen::Index k = 0;
      for (double v : r) m(i, k++) = v;
      ++i;
    }
    return SpdMatrix(m);
  };
  const auto vec = [](double a, double b, double c) { return Vector((Vector(3) << a, b, c).finished()); };
  std::vector<RestrictedParams> comps;
  comps.emplace_back(vec(0.0, 0.0, 0.0), mat({{1.0, 0.3, 0.1}, {0.3, 1.0, 0.2}, {0.1, 0.2, 1.0}}),
                     vec(0.8, 0.4, 0.0), 4.0);
  comps.emplace_back(vec(7.0, 0.5, 1.0), mat({{1.5, -0.3, 0.0}, {-0.3, 1.0, 0.2}, {0.0, 0.2, 0.8}}),
                     vec(-0.6, 0.5, 0.3), 7.0);
  comps.emplace_back(vec(2.5, 7.0, -2.0), mat({{1.0, 0.2, 0.2}, {0.2, 1.2, -0.3}, {0.2, -0.3, 1.0}}),
                     vec(0.3, -0.5, 0.5), 15.0);
  return MixtureModel(Family::rmst, vec(0.3, 0.3, 0.4), std::move(comps));
}

inline constexpr int kCytometryRows = 3000;
/// Fraction of rows flagged as dead (scored out, still fitted).
inline constexpr double kDeadFraction = 0.03;

}  // namespace skewmix::synthetic
