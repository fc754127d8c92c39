#include "dealer/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "dealer/errors.hpp"

namespace dealer {

namespace {

std::vector<double> sorted_descending(std::span<const double> samples) {
  std::vector<double> out(samples.begin(), samples.end());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

std::size_t tail_size(std::size_t n, double fraction, const char* who) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw DomainError(std::string(who) + ": tail fraction must lie in (0, 1]");
  }
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
}

double hill(const std::vector<double>& desc, std::size_t k) {
  const double log_u = std::log(desc[k]);
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) acc += std::log(desc[i]) - log_u;
  return static_cast<double>(k) / acc;
}

struct QuadraticFit {
  std::vector<double> potential;
  double a_left = 0.0;
  double a_right = 0.0;
  double a_joint = 0.0;
};

// U(x) = integral from 0 to x of the piecewise-linear interpolant of
// -mean_dp through the knots, extended linearly past the ends; then
// U ~ a x^2 by least squares through the origin.
QuadraticFit fit_potential(const std::vector<double>& knot_x, const std::vector<double>& knot_mean,
                           const std::vector<std::size_t>* counts,
                           const std::vector<bool>& fitted) {
  const std::size_t n = knot_x.size();
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = -knot_mean[i];
  std::vector<double> cumulative(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    cumulative[i] = cumulative[i - 1] + 0.5 * (g[i] + g[i - 1]) * (knot_x[i] - knot_x[i - 1]);
  }
  auto seg = static_cast<std::size_t>(std::upper_bound(knot_x.begin(), knot_x.end(), 0.0) -
                                      knot_x.begin());
  seg = std::clamp<std::size_t>(seg, 1, n - 1) - 1;
  const double slope = (g[seg + 1] - g[seg]) / (knot_x[seg + 1] - knot_x[seg]);
  const double g0 = g[seg] - slope * knot_x[seg];
  const double at_zero = cumulative[seg] - 0.5 * (g[seg] + g0) * knot_x[seg];

  std::vector<double> weights(n, 1.0);
  if (counts) {
    std::size_t k = 0;
    for (std::size_t b = 0; b < counts->size(); ++b) {
      if (fitted[b]) weights[k++] = static_cast<double>((*counts)[b]);
    }
  }

  QuadraticFit out;
  double num_l = 0.0, den_l = 0.0, num_r = 0.0, den_r = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = cumulative[i] - at_zero;
    out.potential.push_back(u);
    const double x2 = knot_x[i] * knot_x[i];
    if (knot_x[i] < 0.0) {
      num_l += weights[i] * u * x2;
      den_l += weights[i] * x2 * x2;
    } else {
      num_r += weights[i] * u * x2;
      den_r += weights[i] * x2 * x2;
    }
  }
  out.a_joint = (num_l + num_r) / (den_l + den_r);
  out.a_left = den_l > 0.0 ? num_l / den_l : std::nan("");
  out.a_right = den_r > 0.0 ? num_r / den_r : std::nan("");
  return out;
}

}  // namespace

std::vector<double> Histogram::centers() const {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < bin_edges.size(); ++i) {
    out.push_back(0.5 * (bin_edges[i] + bin_edges[i + 1]));
  }
  return out;
}

std::vector<double> Histogram::density() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double width = bin_edges[i + 1] - bin_edges[i];
    out.push_back(total == 0 ? 0.0
                             : static_cast<double>(counts[i]) /
                                   (static_cast<double>(total) * width));
  }
  return out;
}

Histogram make_histogram(std::span<const double> samples, std::size_t bins, double lo, double hi) {
  if (bins == 0) throw DomainError("histogram: bins must be positive");
  if (!(hi > lo)) throw DomainError("histogram: hi must exceed lo");
  Histogram h;
  h.bin_edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) h.bin_edges[i] = lo + width * static_cast<double>(i);
  h.bin_edges.back() = hi;
  h.counts.assign(bins, 0);
  for (double x : samples) {
    if (!(x >= lo && x <= hi)) continue;
    auto i = static_cast<std::size_t>((x - lo) / width);
    if (i >= bins) i = bins - 1;
    ++h.counts[i];
    ++h.total;
  }
  return h;
}

EmpiricalCcdf::EmpiricalCcdf(std::span<const double> samples)
    : sorted_(samples.begin(), samples.end()) {
  if (sorted_.size() < 2) throw DataError("empirical_ccdf: need at least two samples");
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCcdf::operator()(double x) const {
  const auto above = sorted_.end() - std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(above) / static_cast<double>(sorted_.size());
}

EmpiricalCcdf empirical_ccdf(std::span<const double> samples) { return EmpiricalCcdf(samples); }

MomentSummary summarize(std::span<const double> samples) {
  if (samples.size() < 2) throw DataError("summarize: need at least two samples");
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  MomentSummary out;
  out.mean = mean;
  out.variance = ss / (n - 1.0);
  out.cv = mean != 0.0 ? std::sqrt(out.variance) / mean : 0.0;
  return out;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("least_squares: x and y differ in length");
  if (x.size() < 3) throw DataError("least_squares: need at least three points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DataError("least_squares: regressor has zero variance");
  LinearFit fit;
  fit.n = x.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    rss += r * r;
  }
  fit.slope_stderr = std::sqrt(rss / (n - 2.0) / sxx);
  return fit;
}

double fit_exponential_rate(std::span<const double> samples, double tail_fraction) {
  const std::size_t k = tail_size(samples.size(), tail_fraction, "fit_exponential_rate");
  if (k < 100) {
    throw DataError("fit_exponential_rate: need at least 100 tail samples (got " +
                    std::to_string(k) + ")");
  }
  const auto desc = sorted_descending(samples);
  const double n = static_cast<double>(desc.size());
  std::vector<double> xs(desc.begin(), desc.begin() + static_cast<std::ptrdiff_t>(k));
  std::vector<double> ys(k);
  for (std::size_t i = 0; i < k; ++i) ys[i] = std::log(static_cast<double>(i + 1) / n);
  const double rate = -least_squares(xs, ys).slope;
  if (!(rate > 0.0)) throw DataError("fit_exponential_rate: tail does not decay");
  return rate;
}

HillEstimate hill_tail_exponent(std::span<const double> samples, double top_fraction) {
  const std::size_t k = tail_size(samples.size(), top_fraction, "hill_tail_exponent");
  if (k < 500) {
    throw DataError("hill_tail_exponent: need at least 500 tail samples (got " +
                    std::to_string(k) + ")");
  }
  const auto desc = sorted_descending(samples);
  if (k >= desc.size() || !(desc[k] > 0.0)) {
    throw DataError("hill_tail_exponent: tail threshold must be positive");
  }
  HillEstimate est;
  est.tail_count = k;
  est.threshold = desc[k];
  est.exponent = hill(desc, k);
  est.exponent_quarter = hill(desc, k / 4);
  est.drift = est.exponent_quarter / est.exponent - 1.0;
  est.power_law_plausible = std::isfinite(est.drift) && std::abs(est.drift) <= kHillDriftLimit;
  return est;
}

double loglog_ccdf_slope(std::span<const double> samples, double tail_fraction) {
  const std::size_t k = tail_size(samples.size(), tail_fraction, "loglog_ccdf_slope");
  if (k < 100) throw DataError("loglog_ccdf_slope: need at least 100 tail samples");
  const auto desc = sorted_descending(samples);
  if (!(desc[k - 1] > 0.0)) throw DataError("loglog_ccdf_slope: tail must be positive");
  const double n = static_cast<double>(desc.size());
  std::vector<double> xs(k);
  std::vector<double> ys(k);
  for (std::size_t i = 0; i < k; ++i) {
    xs[i] = std::log(desc[i]);
    ys[i] = std::log(static_cast<double>(i + 1) / n);
  }
  return least_squares(xs, ys).slope;
}

std::vector<double> e_series(const TickSeries& ticks, double tau) {
  if (ticks.empty()) throw DataError("e_series: empty tick series");
  const auto intervals = ticks.intervals();
  std::vector<double> out(intervals.size());
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const auto window = window_mean_interval(std::span(intervals.data(), i + 1), tau);
    out[i] = intervals[i] / window.mean;
  }
  return out;
}

PuckSlope puck_slope(const TickSeries& ticks, int M) {
  if (M < 1) throw ConfigError("M must be at least 1");
  const auto m = static_cast<std::size_t>(M);
  if (ticks.size() < m + 50) {
    throw DataError("puck_slope: need at least M + 50 ticks (got " +
                    std::to_string(ticks.size()) + ")");
  }
  const auto dps = ticks.dprices();
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = m - 1; i + 1 < dps.size(); ++i) {
    xs.push_back(weighted_ma(std::span(dps.data() + i + 1 - m, m)));
    ys.push_back(dps[i + 1]);
  }
  PuckSlope out;
  out.fit = least_squares(xs, ys);
  out.b_est = -2.0 * out.fit.slope;
  return out;
}

PotentialFit potential_curve(const TickSeries& ticks, int M, const PotentialOptions& options) {
  if (M < 1) throw ConfigError("M must be at least 1");
  if (options.bins < 2) throw DomainError("potential_curve: need at least two bins");
  const auto m = static_cast<std::size_t>(M);
  const auto prices = ticks.prices();  // P(0..N)
  const std::size_t N = ticks.size();
  if (options.window > N) {
    throw DataError("potential_curve: window of " + std::to_string(options.window) +
                    " ticks exceeds the series length " + std::to_string(N));
  }

  // Pairs (x(n), dP(n+1)) for the last `window` ticks that have M prior prices.
  const std::size_t first = std::max(m, N - options.window);
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t n = first; n < N; ++n) {
    double avg = 0.0;
    for (std::size_t k = 0; k <= m; ++k) avg += prices[n - k];
    avg /= static_cast<double>(m + 1);
    xs.push_back(prices[n] - avg);
    ys.push_back(prices[n + 1] - prices[n]);
  }
  if (xs.size() < options.min_count) throw DataError("potential_curve: too few samples");

  PotentialFit fit;
  const LinearFit reg = least_squares(xs, ys);
  fit.a_reg = -0.5 * reg.slope;
  fit.a_reg_stderr = 0.5 * reg.slope_stderr;

  std::vector<double> sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return i + 1 < sorted.size() ? sorted[i] * (1.0 - frac) + sorted[i + 1] * frac : sorted[i];
  };
  const double lo = quantile(0.01);
  const double hi = quantile(0.99);
  if (!(hi > lo)) throw DataError("potential_curve: x has no spread");

  const std::size_t bins = options.bins;
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<double> sums(bins, 0.0);
  std::vector<double> sq_sums(bins, 0.0);
  fit.counts.assign(bins, 0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] < lo || xs[i] > hi) continue;
    auto b = static_cast<std::size_t>((xs[i] - lo) / width);
    if (b >= bins) b = bins - 1;
    sums[b] += ys[i];
    sq_sums[b] += ys[i] * ys[i];
    ++fit.counts[b];
  }
  std::vector<double> knot_var;  // variance of each fitted bin mean
  for (std::size_t b = 0; b < bins; ++b) {
    fit.centers.push_back(lo + width * (static_cast<double>(b) + 0.5));
    const double n_b = static_cast<double>(fit.counts[b]);
    fit.mean_dp.push_back(fit.counts[b] ? sums[b] / n_b : 0.0);
    fit.fitted.push_back(fit.counts[b] >= options.min_count);
    if (fit.fitted.back()) {
      const double m = fit.mean_dp.back();
      knot_var.push_back(std::max(0.0, (sq_sums[b] - n_b * m * m) / (n_b - 1.0)) / n_b);
    }
  }
  std::vector<double> knot_x;
  std::vector<double> knot_mean;
  for (std::size_t b = 0; b < bins; ++b) {
    if (!fit.fitted[b]) continue;
    knot_x.push_back(fit.centers[b]);
    knot_mean.push_back(fit.mean_dp[b]);
  }
  if (knot_x.size() < 2) {
    throw DataError("potential_curve: fewer than two bins reach the minimum occupancy of " +
                    std::to_string(options.min_count));
  }

  const QuadraticFit q = fit_potential(knot_x, knot_mean, options.weighted ? &fit.counts : nullptr,
                                       fit.fitted);
  std::size_t knot = 0;
  for (std::size_t b = 0; b < bins; ++b) {
    fit.potential.push_back(fit.fitted[b] ? q.potential[knot++] : std::nan(""));
  }

  // The coefficients are linear in the bin means, so their standard errors
  // follow from the response to a unit change of each mean.
  double var_joint = 0.0, var_left = 0.0, var_right = 0.0;
  for (std::size_t j = 0; j < knot_x.size(); ++j) {
    auto bumped = knot_mean;
    bumped[j] += 1.0;
    const QuadraticFit qj = fit_potential(knot_x, bumped,
                                          options.weighted ? &fit.counts : nullptr, fit.fitted);
    var_joint += std::pow(qj.a_joint - q.a_joint, 2) * knot_var[j];
    var_left += std::pow(qj.a_left - q.a_left, 2) * knot_var[j];
    var_right += std::pow(qj.a_right - q.a_right, 2) * knot_var[j];
  }
  fit.a_joint = q.a_joint;
  fit.a_joint_stderr = std::sqrt(var_joint);
  if (options.symmetric) {
    fit.a_left = fit.a_right = fit.a_joint;
    fit.a_left_stderr = fit.a_right_stderr = fit.a_joint_stderr;
  } else {
    fit.a_left = q.a_left;
    fit.a_right = q.a_right;
    fit.a_left_stderr = std::sqrt(var_left);
    fit.a_right_stderr = std::sqrt(var_right);
  }
  fit.b_est = 2.0 * static_cast<double>(M) * fit.a_joint;
  return fit;
}

std::vector<double> diffusion_sigma(std::span<const double> prices,
                                    std::span<const std::size_t> lags) {
  std::vector<double> out;
  for (std::size_t lag : lags) {
    if (lag == 0 || lag * 10 >= prices.size()) {
      throw DataError("diffusion_sigma: lag " + std::to_string(lag) +
                      " needs a series longer than 10 * lag (have " +
                      std::to_string(prices.size()) + ")");
    }
    const std::size_t count = prices.size() - lag;
    double mean = 0.0;
    for (std::size_t i = 0; i < count; ++i) mean += prices[i + lag] - prices[i];
    mean /= static_cast<double>(count);
    double ss = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      const double r = prices[i + lag] - prices[i] - mean;
      ss += r * r;
    }
    out.push_back(std::sqrt(ss / static_cast<double>(count - 1)));
  }
  return out;
}

}  // namespace dealer
