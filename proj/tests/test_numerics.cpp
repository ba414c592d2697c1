#include <cmath>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "skewmix/error.hpp"
#include "skewmix/numerics.hpp"
#include "support.hpp"

using namespace skewmix;
using namespace testsupport;

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

// Student t log-density written out from lgamma, independent of the library.
double t_pdf_oracle(double x, double nu) {
  return std::exp(std::lgamma(0.5 * (nu + 1)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * std::numbers::pi) -
                  0.5 * (nu + 1) * std::log1p(x * x / nu));
}

double phi_oracle(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi); }

template <class F>
void check_error(F&& f, ErrorCode code) {
  try {
    f();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

Matrix mat2(double a, double b, double c, double d) { return (Matrix(2, 2) << a, b, c, d).finished(); }

}  // namespace

TEST_SUITE("numerics") {

TEST_CASE("chol of small matrices") {
  CHECK(chol(Matrix::Identity(3, 3)).isApprox(Matrix::Identity(3, 3), 1e-15));
  const Matrix l = chol(mat2(4, 2, 2, 3));
  CHECK(l(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(l(1, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(l(1, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(l(0, 1) == 0.0);
  check_error([] { chol(mat2(1, 2, 2, 1)); }, ErrorCode::NotPositiveDefinite);
  check_error([] { SpdMatrix(mat2(1, 0.5, 0.4, 1)); }, ErrorCode::NotPositiveDefinite);
}

TEST_CASE("chol reconstructs random SPD matrices") {
  Rng rng(11);
  for (int p = 1; p <= 10; ++p) {
    const Matrix m = random_spd(rng, p);
    const Matrix l = chol(m);
    CHECK((l * l.transpose() - m).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(l.isLowerTriangular());
  }
}

TEST_CASE("mvn_logpdf closed forms") {
  const Vector z1 = Vector::Zero(1);
  CHECK(mvn_logpdf(z1, z1, SpdMatrix::identity(1)) == doctest::Approx(-0.9189385332046727).epsilon(1e-14));
  for (int p = 1; p <= 5; ++p) {
    const Vector mu = Vector::Constant(p, 0.7);
    CHECK(mvn_logpdf(mu, mu, SpdMatrix::identity(p)) == doctest::Approx(-0.5 * p * kLog2Pi).epsilon(1e-14));
  }
  const Vector y = Vector::Ones(2);
  const double expected = -std::log(2 * std::numbers::pi) - 0.5 * std::log(3.0) - 1.0 / 3.0;
  CHECK(mvn_logpdf(y, Vector::Zero(2), SpdMatrix(mat2(2, 1, 1, 2))) == doctest::Approx(expected).epsilon(1e-14));
  check_error([] { mvn_logpdf(Vector::Zero(3), Vector::Zero(2), SpdMatrix::identity(2)); },
              ErrorCode::DimensionMismatch);
}

TEST_CASE("mvt_logpdf closed forms") {
  const Vector z1 = Vector::Zero(1);
  CHECK(mvt_logpdf(z1, z1, SpdMatrix::identity(1), 1.0) == doctest::Approx(-std::log(std::numbers::pi)).epsilon(1e-14));
  Rng rng(3);
  for (int p = 1; p <= 4; ++p) {
    const SpdMatrix s(random_spd(rng, p));
    const Vector mu = normal_vector(rng, p);
    const Vector y = mu + normal_vector(rng, p);
    CHECK(std::abs(mvt_logpdf(y, mu, s, 1e6) - mvn_logpdf(y, mu, s)) < 1e-4);
    const double nu = 3.5;
    const double at_mode = std::lgamma(0.5 * (nu + p)) - std::lgamma(0.5 * nu) - 0.5 * p * std::log(nu * std::numbers::pi) -
                           0.5 * s.log_det();
    CHECK(mvt_logpdf(mu, mu, s, nu) == doctest::Approx(at_mode).epsilon(1e-13));
  }
  check_error([] { mvt_logpdf(Vector::Zero(1), Vector::Zero(1), SpdMatrix::identity(1), 0.0); }, ErrorCode::InvalidDof);
}

TEST_CASE("univariate cdfs against independent references") {
  CHECK(norm_cdf(0.0) == 0.5);
  CHECK(t_cdf(0.0, 3.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(t_cdf(1.0, 1.0) == doctest::Approx(0.75).epsilon(1e-14));
  for (double x = -8.0; x <= 8.0; x += 0.37) {
    CHECK(norm_cdf(x) == doctest::Approx(0.5 * std::erfc(-x / std::numbers::sqrt2)).epsilon(1e-13));
    CHECK(std::abs(std::exp(log_norm_cdf(x)) - norm_cdf(x)) < 1e-15);
  }
  CHECK(log_norm_cdf(-40.0) == doctest::Approx(-0.5 * 1600 - std::log(40.0) - 0.5 * kLog2Pi).epsilon(1e-6));
  for (double nu : {0.7, 1.5, 3.0, 10.0, 60.0}) {
    for (double x = -6.0; x <= 6.0; x += 0.75) {
      const double integral = integrate_interval([&](double s) { return t_pdf_oracle(s, nu); }, 0.0, x);
      CHECK(std::abs(t_cdf(x, nu) - (0.5 + integral)) < 1e-10);
    }
  }
  for (double q : {1e-10, 0.01, 0.3, 0.5, 0.9, 1 - 1e-10}) {
    CHECK(norm_cdf(norm_quantile(q)) == doctest::Approx(q).epsilon(1e-12));
  }
}

TEST_CASE("univariate cdfs are monotone") {
  for (double nu : {1.0, 4.0, 1e6}) {
    double prev = 0.0;
    for (double x = -30.0; x <= 30.0; x += 0.01) {
      const double v = t_cdf(x, nu);
      CHECK(v >= prev);
      prev = v;
    }
  }
  double prev = -std::numeric_limits<double>::infinity();
  for (double x = -50.0; x <= 10.0; x += 0.01) {
    const double v = log_norm_cdf(x);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("mvn_cdf known orthants") {
  const Vector zero2 = Vector::Zero(2);
  const CdfEstimate one = mvn_cdf(Vector::Zero(1), SpdMatrix::identity(1), 10000, 1);
  CHECK(one.estimate == 0.5);
  CHECK(one.se == 0.0);
  const CdfEstimate ind = mvn_cdf(zero2, SpdMatrix::identity(2), 20000, 5);
  CHECK(std::abs(ind.estimate - 0.25) <= std::max(3 * ind.se, 1e-12));
  const CdfEstimate cor = mvn_cdf(zero2, SpdMatrix(mat2(1, 0.5, 0.5, 1)), 20000, 5);
  CHECK(std::abs(cor.estimate - 1.0 / 3.0) <= std::max(3 * cor.se, 1e-12));
  // P(all six coordinates ≤ 0) with equicorrelation ρ = 1/2 is 1/7.
  const Matrix eq = 0.5 * (Matrix::Identity(6, 6) + Matrix::Ones(6, 6));
  const CdfEstimate six = mvn_cdf(Vector::Zero(6), SpdMatrix(eq), 40000, 9);
  CHECK(std::abs(six.estimate - 1.0 / 7.0) <= 3 * six.se + 1e-6);
  check_error([] { mvn_cdf(Vector::Zero(7), SpdMatrix::identity(7), 20000, 1); }, ErrorCode::DimensionTooLarge);
  check_error([] { mvn_cdf(Vector::Zero(2), SpdMatrix::identity(2), 100, 1); }, ErrorCode::InvalidArgument);
}

TEST_CASE("mvn_cdf against a plain Monte Carlo oracle") {
  Rng rng(77);
  for (int p = 2; p <= 4; ++p) {
    const Matrix s = random_spd(rng, p);
    const Vector b = normal_vector(rng, p, 0.8);
    const Matrix l = s.llt().matrixL();
    const int n = 400000;
    int hits = 0;
    for (int i = 0; i < n; ++i) {
      const Vector x = l * normal_vector(rng, p);
      hits += ((x - b).array() <= 0.0).all();
    }
    const double ph = static_cast<double>(hits) / n;
    const double se_mc = std::sqrt(ph * (1 - ph) / n);
    const CdfEstimate est = mvn_cdf(b, SpdMatrix(s), 20000, 3);
    CHECK(std::abs(est.estimate - ph) <= 3 * std::hypot(est.se, se_mc));
  }
}

TEST_CASE("mvn_cdf is a pure function of its seed") {
  const Matrix s = mat2(1.0, 0.3, 0.3, 2.0);
  const Vector b = (Vector(2) << 0.4, -0.2).finished();
  const CdfEstimate a = mvn_cdf(b, SpdMatrix(s), 20000, 42);
  const CdfEstimate c = mvn_cdf(b, SpdMatrix(s), 20000, 42);
  CHECK(a.estimate == c.estimate);
  CHECK(a.se == c.se);
}

TEST_CASE("mvt_cdf") {
  for (double x : {-2.0, 0.3, 1.7}) {
    const Vector b = Vector::Constant(1, x);
    CHECK(mvt_cdf(b, SpdMatrix::identity(1), 4.0, 10000, 1).estimate == doctest::Approx(t_cdf(x, 4.0)).epsilon(1e-15));
  }
  for (double nu : {1.0, 3.0, 20.0}) {
    const CdfEstimate e = mvt_cdf(Vector::Zero(2), SpdMatrix::identity(2), nu, 20000, 8);
    CHECK(std::abs(e.estimate - 0.25) <= std::max(3 * e.se, 1e-12));
  }
  const Matrix s = mat2(1.0, -0.4, -0.4, 1.5);
  const Vector b = (Vector(2) << 0.5, 1.2).finished();
  const CdfEstimate t = mvt_cdf(b, SpdMatrix(s), 1e6, 20000, 4);
  const CdfEstimate n = mvn_cdf(b, SpdMatrix(s), 20000, 4);
  CHECK(std::abs(t.estimate - n.estimate) <= 3 * (t.se + n.se) + 1e-5);
  check_error([] { mvt_cdf(Vector::Zero(2), SpdMatrix::identity(2), -1.0, 20000, 1); }, ErrorCode::InvalidDof);
}

TEST_CASE("trunc_norm_moments") {
  const TruncMoments std_half = trunc_norm_moments(0.0, 1.0);
  CHECK(std_half.m1 == doctest::Approx(std::sqrt(2 / std::numbers::pi)).epsilon(1e-14));
  CHECK(std_half.m2 == doctest::Approx(1.0).epsilon(1e-14));
  const TruncMoments far = trunc_norm_moments(40.0, 2.0);
  CHECK(far.m1 == doctest::Approx(40.0).epsilon(1e-12));
  CHECK(far.m2 == doctest::Approx(1602.0).epsilon(1e-12));
  for (double var : {0.25, 1.0, 4.0}) {
    for (double mu = -3.0; mu <= 3.0; mu += 0.5) {
      const double sd = std::sqrt(var);
      const auto dens = [&](double x) { return phi_oracle((x - mu) / sd) / sd; };
      const double mass = integrate_interval(dens, 0.0, std::numeric_limits<double>::infinity());
      const double m1 = integrate_interval([&](double x) { return x * dens(x); }, 0.0,
                                           std::numeric_limits<double>::infinity()) / mass;
      const double m2 = integrate_interval([&](double x) { return x * x * dens(x); }, 0.0,
                                           std::numeric_limits<double>::infinity()) / mass;
      const TruncMoments got = trunc_norm_moments(mu, var);
      CHECK(std::abs(got.m1 - m1) < 1e-9 * std::max(1.0, m1));
      CHECK(std::abs(got.m2 - m2) < 1e-9 * std::max(1.0, m2));
    }
  }
  // Deep left tail stays finite and positive.
  const TruncMoments tail = trunc_norm_moments(-30.0, 1.0);
  CHECK(tail.m1 > 0.0);
  CHECK(tail.m1 == doctest::Approx(1.0 / 30.0).epsilon(2e-3));
  check_error([] { trunc_norm_moments(0.0, 0.0); }, ErrorCode::InvalidVariance);
}

TEST_CASE("trunc_t_moments") {
  const TruncMoments big = trunc_t_moments(0.0, 1.0, 1e6);
  CHECK(std::abs(big.m1 - std::sqrt(2 / std::numbers::pi)) < 1e-4);
  CHECK(trunc_t_moments(0.0, 1.0, 3.0).m1 == doctest::Approx(2 * std::sqrt(3.0) / std::numbers::pi).epsilon(1e-12));
  check_error([] { trunc_t_moments(0.0, 1.0, 1.5); }, ErrorCode::MomentUndefined);
  CHECK(std::isfinite(trunc_t_mean(0.0, 1.0, 1.5)));
  for (double nu : {3.0, 5.0, 10.0, 100.0}) {
    for (double mu : {-2.0, -0.5, 0.0, 1.0, 2.5}) {
      const double var = 1.7;
      const double sd = std::sqrt(var);
      const auto dens = [&](double x) { return t_pdf_oracle((x - mu) / sd, nu) / sd; };
      const double inf = std::numeric_limits<double>::infinity();
      const double mass = integrate_interval(dens, 0.0, inf, 1e-13);
      const double m1 = integrate_interval([&](double x) { return x * dens(x); }, 0.0, inf, 1e-13) / mass;
      const double m2 = integrate_interval([&](double x) { return x * x * dens(x); }, 0.0, inf, 1e-13) / mass;
      const TruncMoments got = trunc_t_moments(mu, var, nu);
      CHECK(std::abs(got.m1 - m1) < 1e-8 * std::max(1.0, m1));
      CHECK(std::abs(got.m2 - m2) < 1e-8 * std::max(1.0, m2));
      CHECK(trunc_t_mean(mu, var, nu) == doctest::Approx(got.m1).epsilon(1e-12));
    }
  }
}

TEST_CASE("logsumexp and pairwise_sum") {
  const std::vector<double> one{2.5};
  CHECK(logsumexp(one) == 2.5);
  const std::vector<double> two{std::log(3.0), std::log(5.0)};
  CHECK(logsumexp(two) == doctest::Approx(std::log(8.0)).epsilon(1e-15));
  const std::vector<double> huge{1000.0, 1000.0};
  CHECK(logsumexp(huge) == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-15));
  const std::vector<double> tiny{-1000.0, -1000.0};
  CHECK(logsumexp(tiny) == doctest::Approx(-1000.0 + std::log(2.0)).epsilon(1e-15));
  check_error([] { logsumexp(std::span<const double>()); }, ErrorCode::EmptyInput);
  std::vector<double> v(1001);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  CHECK(pairwise_sum(v) == 500500.0);
  CHECK(pairwise_sum(std::span<const double>()) == 0.0);
}

}
