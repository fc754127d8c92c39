#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dealer/engine.hpp"

namespace dealer {

struct Histogram {
  std::vector<double> bin_edges;     // strictly increasing, size = counts + 1
  std::vector<std::size_t> counts;
  std::size_t total = 0;             // sum of counts

  std::vector<double> centers() const;
  std::vector<double> density() const;  // counts / (total * width)
};

// Equal-width bins on [lo, hi]; samples outside are dropped.
Histogram make_histogram(std::span<const double> samples, std::size_t bins, double lo, double hi);

// Right-continuous survival function S(x) = #{samples > x} / n.
// At the smallest sample S = 1 - 1/n when it is unique.
class EmpiricalCcdf {
public:
  explicit EmpiricalCcdf(std::span<const double> samples);
  double operator()(double x) const;
  std::size_t size() const { return sorted_.size(); }
  const std::vector<double>& sorted() const { return sorted_; }

private:
  std::vector<double> sorted_;
};

// Requires at least two samples.
EmpiricalCcdf empirical_ccdf(std::span<const double> samples);

struct MomentSummary {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double cv = 0.0;        // sqrt(variance) / mean
};

MomentSummary summarize(std::span<const double> samples);

// Decay rate of an exponential tail: least-squares slope of log S(x_(i)) =
// log(i/n) against the i-th largest sample over the top tail_fraction.
// Needs at least 100 tail samples.
double fit_exponential_rate(std::span<const double> samples, double tail_fraction);

struct HillEstimate {
  double exponent = 0.0;          // beta with S(x) ~ x^-beta
  std::size_t tail_count = 0;     // k
  double threshold = 0.0;         // x_(k+1)
  double exponent_quarter = 0.0;  // same estimator on the top k/4 samples
  // exponent_quarter / exponent - 1. A power-law tail keeps this near 0; an
  // exponential tail drives it up as the threshold rises.
  double drift = 0.0;
  bool power_law_plausible = false;
};

inline constexpr double kHillDriftLimit = 0.15;

// Hill estimator over the top_fraction largest samples (at least 500).
HillEstimate hill_tail_exponent(std::span<const double> samples, double top_fraction = 0.01);

// Slope of log S(x) against log x over the top tail_fraction; secondary
// diagnostic for power-law tails.
double loglog_ccdf_slope(std::span<const double> samples, double tail_fraction);

// e(n) = I(n) / <I>_tau with the engine's window rule.
std::vector<double> e_series(const TickSeries& ticks, double tau);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  std::size_t n = 0;
};

// Ordinary least squares y = intercept + slope * x.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

struct PuckSlope {
  LinearFit fit;       // dP(n+1) against <dP>_M(n)
  double b_est = 0.0;  // -2 * slope
};

// Needs at least M + 50 ticks.
PuckSlope puck_slope(const TickSeries& ticks, int M);

struct PotentialOptions {
  std::size_t window = 500;     // ticks analysed, taken from the end of the series
  std::size_t bins = 8;         // equal-width bins over the central 98% of x
  std::size_t min_count = 20;   // bins with fewer samples are not fitted
  bool symmetric = true;        // joint fit (a_left = a_right) or one per side
  bool weighted = false;        // weight the quadratic fit by bin occupancy
};

struct PotentialFit {
  std::vector<double> centers;    // bin centers of x = P(n) - P_{M+1}(n)
  std::vector<double> mean_dp;    // conditional mean of dP(n+1)
  std::vector<std::size_t> counts;
  std::vector<double> potential;  // -integral of mean_dp, zero at x = 0
  std::vector<bool> fitted;       // bin occupancy >= min_count
  double a_left = 0.0;            // U ~ a x^2 on x < 0
  double a_right = 0.0;           // U ~ a x^2 on x >= 0
  double a_joint = 0.0;           // one coefficient for both sides
  double a_left_stderr = 0.0;
  double a_right_stderr = 0.0;
  double a_joint_stderr = 0.0;
  double b_est = 0.0;             // 2 M a_joint
  // Sample regression of dP(n+1) on x: a_reg = -slope / 2.
  double a_reg = 0.0;
  double a_reg_stderr = 0.0;
  // Two standard errors of a_joint; a flat potential stays below it.
  double noise_floor() const { return 2.0 * a_joint_stderr; }
};

PotentialFit potential_curve(const TickSeries& ticks, int M, const PotentialOptions& options = {});

// sigma(lag) = standard deviation of P(n + lag) - P(n) over all n.
// Every lag must be below prices.size() / 10.
std::vector<double> diffusion_sigma(std::span<const double> prices,
                                    std::span<const std::size_t> lags);

}  // namespace dealer
