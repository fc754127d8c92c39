#pragma once

#include <cstdint>

namespace dealer {

// Largest k for which the secant number E_k fits in 64 bits.
inline constexpr int kMaxEulerIndex = 12;

// Secant (Euler) numbers: sec x = sum_k E_k x^(2k) / (2k)!.
// E_0..E_4 = 1, 1, 5, 61, 1385. Throws RangeError for k outside [0, 12].
std::uint64_t euler_number(int k);

// beta(s) = sum_{n>=0} (-1)^n / (2n+1)^s for s > 0, to about 1e-15 relative.
double dirichlet_beta(double s);

// Catalan's constant, beta(2).
double catalan();

// Exact laws of the Model-1 market with spread L and noise amplitude c.
struct ClosedFormLaw {
  double L = 0.01;
  double c = 0.01;
  double tolerance = 1e-12;  // relative truncation error of the series
  int series_terms = 100000;  // hard cap on series length

  void validate() const;
};

enum class Quantity { pdf, ccdf };

// Transaction interval law Q1. The eigenfunction series is used for
// c^2 I / L^2 >= 0.2 and the equivalent image (erfc) series below that.
double q1(double interval, const ClosedFormLaw& law, Quantity which);

// Law of |dP|. The alternating exponential series sums to
// pdf = (2/L) sech(pi x / L), ccdf = (4/pi) atan(exp(-pi x / L)).
double q2(double abs_dprice, const ClosedFormLaw& law, Quantity which);

// Same quantity by direct truncation of the exponential series; x > 0.
double q2_series(double abs_dprice, const ClosedFormLaw& law, Quantity which);

enum class MomentKind { interval, abs_dprice };

// k-th raw moment.
//   interval:   L^(2k) k! E_k / (c^(2k) (2k)!),  1 <= k <= 12
//   abs_dprice: 4 L^k k! beta(k+1) / pi^(k+1),    1 <= k <= 150
double moment(MomentKind kind, int k, const ClosedFormLaw& law);

// <I^beta> for real beta > 0 by term-wise integration of Q1:
// (4/pi) Gamma(beta+1) (2L/(c pi))^(2 beta) beta_D(2 beta + 1).
double interval_moment(double order, const ClosedFormLaw& law);
double log_interval_moment(double order, const ClosedFormLaw& law);

struct MeanVariance {
  double mean_interval;
  double var_interval;
  double mean_abs_dprice;
  double var_abs_dprice;
};

// L^2/2c^2, L^4/6c^4, 4KL/pi^2, (1/4 - 16K^2/pi^4) L^2.
MeanVariance model1_mean_variance(const ClosedFormLaw& law);

struct TailRates {
  double interval_rate;  // (c pi / 2L)^2
  double dprice_rate;    // pi / L
};

TailRates tail_rates(const ClosedFormLaw& law);

// |d| with |d|^beta <I^beta> = 1. Integer orders up to 12 use the Euler
// number moments, other orders the real-order series.
double solve_trend_coefficient(double beta, const ClosedFormLaw& law);

// Positive root beta of beta log|d| + log <I^beta> = 0 in [1e-6, 64].
// Throws NumericalError when the root is not bracketed.
double solve_tail_exponent(double d, const ClosedFormLaw& law);

// <b> = -2 d <I> = -d (L/c)^2.
double puck_b_mean(double d, const ClosedFormLaw& law);

// sigma_d / sigma_{d=0} = 2c^2 / (2c^2 - d L^2). Throws BubbleRegimeError
// for d >= 2c^2/L^2.
double diffusion_ratio(double d, const ClosedFormLaw& law);

// Density of the reduced random walk at time t: x along the midpoint axis,
// y = D + L in [0, 2L] with absorbing walls at both ends.
double density_u(double x, double y, double t, const ClosedFormLaw& law);

}  // namespace dealer
