#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "dealer/closedform.hpp"
#include "dealer/engine.hpp"
#include "dealer/errors.hpp"

using namespace dealer;
using std::numbers::pi;

namespace {

const ClosedFormLaw kLaw{0.01, 0.01};

// Integral of f over [0, inf), split at a so both pieces are smooth.
template <class F>
double integrate_half_line(F f, double split) {
  boost::math::quadrature::tanh_sinh<double> finite;
  boost::math::quadrature::exp_sinh<double> tail;
  return finite.integrate(f, 0.0, split) +
         tail.integrate(
             [&](double x) {
               // x^k overflows where the density has long underflowed.
               const double v = f(split + x);
               return std::isfinite(v) ? v : 0.0;
             },
             0.0, std::numeric_limits<double>::infinity());
}

double q1_pdf(double I, const ClosedFormLaw& law = kLaw) { return q1(I, law, Quantity::pdf); }
double q2_pdf(double x, const ClosedFormLaw& law = kLaw) { return q2(x, law, Quantity::pdf); }

bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::abs(b); }

}  // namespace

TEST_SUITE("closedform") {

TEST_CASE("Euler numbers") {
  const std::uint64_t expected[] = {1,
                                    1,
                                    5,
                                    61,
                                    1385,
                                    50521,
                                    2702765,
                                    199360981,
                                    19391512145ull,
                                    2404879675441ull,
                                    370371188237525ull,
                                    69348874393137901ull,
                                    15514534163557086905ull};
  for (int k = 0; k <= kMaxEulerIndex; ++k) CHECK(euler_number(k) == expected[k]);
  CHECK_THROWS_AS(euler_number(13), RangeError);
  CHECK_THROWS_AS(euler_number(-1), RangeError);
}

TEST_CASE("Dirichlet beta") {
  CHECK(dirichlet_beta(1.0) == doctest::Approx(pi / 4).epsilon(1e-14));
  CHECK(dirichlet_beta(2.0) == doctest::Approx(0.915965594177219015).epsilon(1e-14));
  CHECK(catalan() == doctest::Approx(0.9159655942).epsilon(1e-10));
  CHECK(dirichlet_beta(3.0) == doctest::Approx(pi * pi * pi / 32).epsilon(1e-14));
  CHECK(dirichlet_beta(5.0) == doctest::Approx(5 * std::pow(pi, 5) / 1536).epsilon(1e-14));
  CHECK(dirichlet_beta(0.5) == doctest::Approx(0.6676914571896091767).epsilon(1e-13));
  CHECK(dirichlet_beta(4.5) == doctest::Approx(0.9934669849204003035).epsilon(1e-14));
  CHECK(dirichlet_beta(7.0) == doctest::Approx(0.9995545078905399095).epsilon(1e-14));
  CHECK(dirichlet_beta(40.0) == doctest::Approx(1.0 - std::pow(3.0, -40.0)).epsilon(1e-15));
  CHECK_THROWS_AS(dirichlet_beta(0.0), DomainError);
  CHECK_THROWS_AS(dirichlet_beta(-1.0), DomainError);
}

TEST_CASE("q1 frozen values") {
  CHECK(q1(0.0, kLaw, Quantity::ccdf) == 1.0);
  CHECK(q1(0.0, kLaw, Quantity::pdf) == 0.0);
  CHECK(q1_pdf(0.5) == doctest::Approx(0.9147304512678398646).epsilon(1e-12));
  CHECK(q1(0.5, kLaw, Quantity::ccdf) == doctest::Approx(0.3707774297995239054).epsilon(1e-12));
  CHECK(q1_pdf(0.2) == doctest::Approx(1.806977783164648931).epsilon(1e-12));
  CHECK(q1_pdf(0.03) == doctest::Approx(0.02609891776963650922).epsilon(1e-11));
  CHECK(q1(0.03, kLaw, Quantity::ccdf) == doctest::Approx(0.9999108858187918877).epsilon(1e-12));
  CHECK_THROWS_AS(q1(-1.0, kLaw, Quantity::pdf), DomainError);
}

TEST_CASE("q1 eigen and image series meet at the switch point") {
  // c^2 I / L^2 = 0.2 at I = 0.2 for c = L.
  for (Quantity which : {Quantity::pdf, Quantity::ccdf}) {
    const double below = q1(std::nextafter(0.2, 0.0), kLaw, which);
    const double above = q1(0.2, kLaw, which);
    CHECK(below == doctest::Approx(above).epsilon(1e-12));
  }
}

TEST_CASE("q2 frozen values and series agreement") {
  CHECK(q2_pdf(0.0) == doctest::Approx(200.0).epsilon(1e-14));
  CHECK(q2(0.0, kLaw, Quantity::ccdf) == 1.0);
  CHECK(q2_pdf(0.003) == doctest::Approx(135.3182933558070418).epsilon(1e-13));
  CHECK(q2(0.003, kLaw, Quantity::ccdf) == doctest::Approx(0.4730873223013764127).epsilon(1e-13));
  for (double x : {0.0005, 0.002, 0.01, 0.05}) {
    for (Quantity which : {Quantity::pdf, Quantity::ccdf}) {
      CHECK(q2_series(x, kLaw, which) == doctest::Approx(q2(x, kLaw, which)).epsilon(1e-10));
    }
  }
  CHECK_THROWS_AS(q2(-0.001, kLaw, Quantity::pdf), DomainError);
}

TEST_CASE("normalization and monotone ccdfs") {
  CHECK(integrate_half_line([](double I) { return q1_pdf(I); }, 1.0) ==
        doctest::Approx(1.0).epsilon(1e-10));
  CHECK(integrate_half_line([](double x) { return q2_pdf(x); }, 0.01) ==
        doctest::Approx(1.0).epsilon(1e-10));
  double prev1 = 1.0, prev2 = 1.0;
  for (int i = 1; i <= 400; ++i) {
    const double s1 = q1(0.01 * i, kLaw, Quantity::ccdf);
    const double s2 = q2(0.0001 * i, kLaw, Quantity::ccdf);
    REQUIRE(s1 <= prev1);
    REQUIRE(s2 <= prev2);
    REQUIRE(s1 >= 0.0);
    REQUIRE(s2 >= 0.0);
    prev1 = s1;
    prev2 = s2;
  }
  CHECK(q1(40.0, kLaw, Quantity::ccdf) < 1e-40);
}

TEST_CASE("ccdf is the integral of the pdf") {
  boost::math::quadrature::gauss_kronrod<double, 31> gk;
  for (double I : {0.05, 0.3, 1.5}) {
    const double tail = integrate_half_line([&](double u) { return q1_pdf(I + u); }, 1.0);
    CHECK(tail == doctest::Approx(q1(I, kLaw, Quantity::ccdf)).epsilon(1e-9));
  }
  const double piece = gk.integrate([](double x) { return q2_pdf(x); }, 0.001, 0.004);
  CHECK(piece == doctest::Approx(q2(0.001, kLaw, Quantity::ccdf) - q2(0.004, kLaw, Quantity::ccdf))
                     .epsilon(1e-10));
}

TEST_CASE("moments match quadrature of the densities") {
  for (const ClosedFormLaw law : {kLaw, ClosedFormLaw{0.02, 0.013}}) {
    for (int k = 1; k <= 4; ++k) {
      const double split = 2.0 * moment(MomentKind::interval, 1, law);
      const double qi =
          integrate_half_line([&](double I) { return std::pow(I, k) * q1_pdf(I, law); }, split);
      CHECK(close(qi, moment(MomentKind::interval, k, law), 1e-6));
      const double qx = integrate_half_line(
          [&](double x) { return std::pow(x, k) * q2_pdf(x, law); }, law.L);
      CHECK(close(qx, moment(MomentKind::abs_dprice, k, law), 1e-6));
    }
  }
  CHECK_THROWS_AS(moment(MomentKind::interval, 0, kLaw), RangeError);
  CHECK_THROWS_AS(moment(MomentKind::interval, 13, kLaw), RangeError);
}

TEST_CASE("frozen moments") {
  CHECK(moment(MomentKind::interval, 1, kLaw) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(moment(MomentKind::interval, 2, kLaw) == doctest::Approx(5.0 / 12.0).epsilon(1e-15));
  CHECK(moment(MomentKind::abs_dprice, 1, kLaw) == doctest::Approx(3.7122687271077e-3).epsilon(1e-12));
  CHECK(moment(MomentKind::abs_dprice, 2, kLaw) == doctest::Approx(2.5e-5).epsilon(1e-14));
}

TEST_CASE("mean and variance identities") {
  for (const ClosedFormLaw law : {kLaw, ClosedFormLaw{0.03, 0.007}}) {
    const auto mv = model1_mean_variance(law);
    const double L = law.L, c = law.c, K = catalan();
    CHECK(close(mv.mean_interval, L * L / (2 * c * c), 1e-12));
    CHECK(close(mv.var_interval, std::pow(L, 4) / (6 * std::pow(c, 4)), 1e-12));
    CHECK(close(mv.mean_abs_dprice, 4 * K * L / (pi * pi), 1e-12));
    CHECK(close(mv.var_abs_dprice, (0.25 - 16 * K * K / std::pow(pi, 4)) * L * L, 1e-12));
    const double m1 = moment(MomentKind::interval, 1, law);
    const double m2 = moment(MomentKind::interval, 2, law);
    CHECK(close(m2 - m1 * m1, mv.var_interval, 1e-12));
    const double x1 = moment(MomentKind::abs_dprice, 1, law);
    const double x2 = moment(MomentKind::abs_dprice, 2, law);
    CHECK(close(x2 - x1 * x1, mv.var_abs_dprice, 1e-12));
    CHECK(close(x2, L * L / 4, 1e-12));
  }
  const auto mv = model1_mean_variance(kLaw);
  CHECK(mv.var_abs_dprice == doctest::Approx(1.1219e-5).epsilon(1e-4));
}

TEST_CASE("tail rates") {
  const auto r = tail_rates(kLaw);
  CHECK(r.interval_rate == doctest::Approx(2.4674011).epsilon(1e-7));
  CHECK(r.dprice_rate == doctest::Approx(314.159265).epsilon(1e-8));
  const auto wide = tail_rates(ClosedFormLaw{0.02, 0.01});
  CHECK(wide.interval_rate == doctest::Approx(r.interval_rate / 4));
  const auto loud = tail_rates(ClosedFormLaw{0.01, 0.02});
  CHECK(loud.interval_rate == doctest::Approx(r.interval_rate * 4));
  CHECK(loud.dprice_rate == r.dprice_rate);

  // The densities approach the leading exponential.
  const double ratio = q1_pdf(8.0) / q1_pdf(7.0);
  CHECK(-std::log(ratio) == doctest::Approx(r.interval_rate).epsilon(1e-9));
  const double xr = q2_pdf(0.08) / q2_pdf(0.07);
  CHECK(-std::log(xr) / 0.01 == doctest::Approx(r.dprice_rate).epsilon(1e-9));
}

TEST_CASE("real-order interval moments") {
  CHECK(interval_moment(0.5, kLaw) == doctest::Approx(0.6579825000958199397).epsilon(1e-12));
  CHECK(interval_moment(2.5, kLaw) == doctest::Approx(0.4418914162445950367).epsilon(1e-12));
  for (int k = 1; k <= 6; ++k) {
    CHECK(close(interval_moment(k, kLaw), moment(MomentKind::interval, k, kLaw), 1e-12));
  }
  for (double beta : {0.3, 1.7, 4.2}) {
    const double q =
        integrate_half_line([&](double I) { return std::pow(I, beta) * q1_pdf(I); }, 1.0);
    CHECK(close(interval_moment(beta, kLaw), q, 1e-8));
    CHECK(log_interval_moment(beta, kLaw) == doctest::Approx(std::log(q)).epsilon(1e-8));
  }
}

TEST_CASE("trend coefficient for a target exponent") {
  CHECK(solve_trend_coefficient(3.0, kLaw) == doctest::Approx(std::cbrt(720.0 / 366.0)).epsilon(1e-12));
  CHECK(solve_trend_coefficient(3.0, kLaw) == doctest::Approx(1.2531).epsilon(1e-3 / 1.2531));
  CHECK(solve_trend_coefficient(1.0, kLaw) == doctest::Approx(2.0).epsilon(1e-14));
  const ClosedFormLaw half{0.005, 0.01};
  CHECK(solve_trend_coefficient(2.5, half) ==
        doctest::Approx(4.0 * solve_trend_coefficient(2.5, kLaw)).epsilon(1e-12));
  CHECK_THROWS_AS(solve_trend_coefficient(0.0, kLaw), DomainError);

  double prev = 1e300;
  for (double beta = 0.25; beta <= 12.0; beta += 0.25) {
    const double d = solve_trend_coefficient(beta, kLaw);
    REQUIRE(d < prev);
    prev = d;
  }
}

TEST_CASE("tail exponent solver inverts the trend coefficient") {
  for (double beta : {0.5, 1.0, 1.5, 2.0, 3.0, 4.7, 8.0, 12.0, 20.0}) {
    const double d = solve_trend_coefficient(beta, kLaw);
    CHECK(solve_tail_exponent(d, kLaw) == doctest::Approx(beta).epsilon(1e-8));
    CHECK(solve_tail_exponent(-d, kLaw) == doctest::Approx(beta).epsilon(1e-8));
  }
  CHECK(solve_tail_exponent(1.2531, kLaw) == doctest::Approx(3.0).epsilon(1e-3));
  CHECK(solve_tail_exponent(2.0, kLaw) == doctest::Approx(1.0).epsilon(1e-10));
  double prev = 1e300;
  for (double d = 0.9; d <= 2.3; d += 0.1) {
    const double beta = solve_tail_exponent(d, kLaw);
    REQUIRE(beta < prev);
    prev = beta;
  }
  CHECK_THROWS_AS(solve_tail_exponent(0.0, kLaw), DomainError);
  // Once log|d| + <log I> > 0 the log-moment stays positive: no root.
  CHECK_THROWS_AS(solve_tail_exponent(2.7, kLaw), NumericalError);
  CHECK_THROWS_AS(solve_tail_exponent(100.0, kLaw), NumericalError);
}

TEST_CASE("Monte Carlo moments of the multiplicative factor") {
  SimParams p;
  p.n_ticks = 100000;
  p.seed = 2024;
  const auto intervals = run(p).intervals();
  for (double d : {2.0, 1.25}) {
    const double beta = solve_tail_exponent(d, kLaw);
    double sum = 0.0;
    for (double I : intervals) sum += std::pow(d * I, beta);
    const double mc = sum / static_cast<double>(intervals.size());
    CHECK(mc == doctest::Approx(1.0).epsilon(d == 2.0 ? 0.02 : 0.06));
  }
}

TEST_CASE("mean potential coefficient") {
  CHECK(puck_b_mean(1.0, kLaw) == doctest::Approx(-1.0));
  CHECK(puck_b_mean(0.0, kLaw) == 0.0);
  CHECK_FALSE(std::signbit(puck_b_mean(0.0, kLaw)));
  CHECK(puck_b_mean(-1.0, kLaw) == doctest::Approx(1.0));
  CHECK(puck_b_mean(-1.0, ClosedFormLaw{0.02, 0.01}) == doctest::Approx(4.0));
  CHECK(puck_b_mean(0.7, kLaw) ==
        doctest::Approx(-2.0 * 0.7 * moment(MomentKind::interval, 1, kLaw)));
}

TEST_CASE("diffusion ratio") {
  CHECK(diffusion_ratio(0.0, kLaw) == 1.0);
  CHECK(diffusion_ratio(-1.0, kLaw) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(diffusion_ratio(2.0, kLaw), BubbleRegimeError);
  CHECK_THROWS_AS(diffusion_ratio(3.0, kLaw), DomainError);
  CHECK(diffusion_ratio(0.5, kLaw) > 1.0);
  CHECK(diffusion_ratio(-0.5, kLaw) < 1.0);
  CHECK(diffusion_ratio(2.0 - 1e-9, kLaw) > 1e8);
  double prev = 0.0;
  for (double d = -5.0; d < 1.99; d += 0.05) {
    const double r = diffusion_ratio(d, kLaw);
    REQUIRE(r > prev);
    prev = r;
  }
}

TEST_CASE("density of the reduced walk") {
  const double L = kLaw.L;
  CHECK(density_u(0.001, 0.0, 0.3, kLaw) == 0.0);
  CHECK(density_u(0.001, 2 * L, 0.3, kLaw) == 0.0);
  for (double t : {0.05, 0.4, 2.0}) {
    for (double y : {0.003, 0.01, 0.017}) {
      CHECK(density_u(0.002, y, t, kLaw) == doctest::Approx(density_u(-0.002, y, t, kLaw)));
    }
  }
  CHECK(density_u(0.0, 0.007, 0.3, kLaw) == doctest::Approx(density_u(0.0, 0.013, 0.3, kLaw)));
  CHECK_THROWS_AS(density_u(0.0, -0.001, 0.3, kLaw), DomainError);
  CHECK_THROWS_AS(density_u(0.0, 0.021, 0.3, kLaw), DomainError);
  CHECK_THROWS_AS(density_u(0.0, 0.01, 0.0, kLaw), DomainError);
}

TEST_CASE("spatial integral of the density is the interval survival") {
  boost::math::quadrature::gauss_kronrod<double, 61> gk;
  const auto mass = [&](double t) {
    const double sx = kLaw.c * std::sqrt(t / 2.0);
    return gk.integrate(
        [&](double y) {
          return 2.0 * gk.integrate([&](double x) { return density_u(x, y, t, kLaw); }, 0.0,
                                    12.0 * sx, 8);
        },
        0.0, 2.0 * kLaw.L, 8);
  };
  for (double t : {0.1, 0.3, 1.0}) {
    CHECK(mass(t) == doctest::Approx(q1(t, kLaw, Quantity::ccdf)).epsilon(1e-8));
  }
  const double t = 0.5, h = 1e-4;
  const double rate = -(mass(t + h) - mass(t - h)) / (2 * h);
  CHECK(rate == doctest::Approx(q1_pdf(t)).epsilon(1e-6));
}

TEST_CASE("truncation control") {
  ClosedFormLaw longer = kLaw;
  longer.series_terms *= 2;
  for (double I : {0.01, 0.2, 1.0, 5.0}) {
    CHECK(std::abs(q1(I, longer, Quantity::ccdf) - q1(I, kLaw, Quantity::ccdf)) < 1e-12);
    CHECK(close(q1(I, longer, Quantity::pdf), q1(I, kLaw, Quantity::pdf), 1e-12));
  }
  ClosedFormLaw bad = kLaw;
  bad.c = 0.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

}  // TEST_SUITE
