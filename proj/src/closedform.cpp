#include "dealer/closedform.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "dealer/errors.hpp"

namespace dealer {

namespace {

constexpr double kPi = std::numbers::pi;

// Below this value of c^2 t / L^2 the image series converges faster than
// the eigenfunction series.
constexpr double kImageRegime = 0.2;

std::string describe(const ClosedFormLaw& law) {
  std::ostringstream os;
  os << "(L=" << law.L << ", c=" << law.c << ")";
  return os.str();
}

[[noreturn]] void series_failure(const char* what, const ClosedFormLaw& law) {
  throw NumericalError(std::string(what) + ": series did not converge within " +
                       std::to_string(law.series_terms) + " terms " + describe(law));
}

double q1_eigen(double interval, const ClosedFormLaw& law, Quantity which) {
  const double rate1 = std::pow(law.c * kPi / (2.0 * law.L), 2);
  double sum = 0.0;
  double sign = 1.0;
  for (int n = 1; n <= law.series_terms; ++n) {
    const double m = 2.0 * n - 1.0;
    const double decay = std::exp(-rate1 * m * m * interval);
    const double term = which == Quantity::pdf ? sign * m * decay : sign * decay / m;
    sum += term;
    if (std::abs(term) <= law.tolerance * std::abs(sum)) {
      return which == Quantity::pdf ? 4.0 / kPi * rate1 * sum : 4.0 / kPi * sum;
    }
    sign = -sign;
  }
  series_failure("q1", law);
}

double q1_images(double interval, const ClosedFormLaw& law, Quantity which) {
  const double z = law.L / (2.0 * law.c * std::sqrt(interval));
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 0; k <= law.series_terms; ++k) {
    const double m = 2.0 * k + 1.0;
    const double term = which == Quantity::pdf ? sign * m * std::exp(-m * m * z * z)
                                               : sign * std::erfc(m * z);
    sum += term;
    if (std::abs(term) <= law.tolerance * std::abs(sum) || term == 0.0) {
      if (which == Quantity::pdf) return 2.0 * z * sum / (std::sqrt(kPi) * interval);
      return 1.0 - 2.0 * sum;
    }
    sign = -sign;
  }
  series_failure("q1", law);
}

// Killed heat kernel on [0, 2L] started at L, eigenfunction form.
double kernel_eigen(double y, double t, const ClosedFormLaw& law) {
  const double rate1 = std::pow(law.c * kPi / (2.0 * law.L), 2);
  const double lead = std::exp(-rate1 * t);
  double sum = 0.0;
  double sign = 1.0;
  for (int m = 1; m <= law.series_terms; ++m) {
    const double odd = 2.0 * m - 1.0;
    const double decay = std::exp(-rate1 * odd * odd * t);
    sum += sign * std::sin(odd * kPi * y / (2.0 * law.L)) * decay;
    if (decay <= law.tolerance * lead) return sum / law.L;
    sign = -sign;
  }
  series_failure("density_u", law);
}

// Same kernel by the method of images.
double kernel_images(double y, double t, const ClosedFormLaw& law) {
  const double var4 = 4.0 * law.c * law.c * t;
  const double norm = 1.0 / std::sqrt(kPi * var4);
  auto g = [&](double s) { return norm * std::exp(-s * s / var4); };
  double sum = g(y - law.L) - g(y + law.L);
  for (int k = 1; k <= law.series_terms; ++k) {
    const double shift = 4.0 * k * law.L;
    const double term = g(y - law.L + shift) - g(y + law.L + shift) + g(y - law.L - shift) -
                        g(y + law.L - shift);
    sum += term;
    if (std::abs(term) <= law.tolerance * norm) return sum;
  }
  series_failure("density_u", law);
}

}  // namespace

std::uint64_t euler_number(int k) {
  if (k < 0 || k > kMaxEulerIndex) {
    throw RangeError("euler_number: k must lie in [0, " + std::to_string(kMaxEulerIndex) +
                     "] (got " + std::to_string(k) + ")");
  }
  // Seidel-Entringer triangle; row n ends with the zigzag number A_n, and
  // E_k = A_{2k}. Entries never exceed the final value.
  const int rows = 2 * k;
  std::array<std::uint64_t, 2 * kMaxEulerIndex + 1> prev{};
  std::array<std::uint64_t, 2 * kMaxEulerIndex + 1> cur{};
  prev[0] = 1;
  for (int n = 1; n <= rows; ++n) {
    cur[0] = 0;
    for (int j = 1; j <= n; ++j) cur[j] = cur[j - 1] + prev[n - j];
    prev = cur;
  }
  return prev[rows];
}

double dirichlet_beta(double s) {
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw DomainError("dirichlet_beta: s must be positive (got " + std::to_string(s) + ")");
  }
  if (s >= 20.0) {
    double sum = 1.0;
    double sign = -1.0;
    for (int n = 1;; ++n) {
      const double term = std::pow(2.0 * n + 1.0, -s);
      sum += sign * term;
      if (term < 1e-18) return sum;
      sign = -sign;
    }
  }
  // Cohen-Rodriguez Villegas-Zagier acceleration of the alternating series.
  // The terms (2n+1)^-s are moments of a positive measure, so the error
  // after N terms is below 2 / (3 + sqrt 8)^N.
  constexpr int N = 44;
  double d = std::pow(3.0 + std::sqrt(8.0), N);
  d = 0.5 * (d + 1.0 / d);
  double b = -1.0;
  double c = -d;
  double sum = 0.0;
  for (int k = 0; k < N; ++k) {
    c = b - c;
    sum += c * std::pow(2.0 * k + 1.0, -s);
    b = (k + N) * (k - N) * b / ((k + 0.5) * (k + 1.0));
  }
  return sum / d;
}

double catalan() { return dirichlet_beta(2.0); }

void ClosedFormLaw::validate() const {
  if (!(L > 0.0) || !std::isfinite(L)) throw DomainError("law: L must be positive");
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("law: c must be positive");
  if (!(tolerance > 0.0)) throw DomainError("law: tolerance must be positive");
  if (series_terms < 1) throw DomainError("law: series_terms must be at least 1");
}

double q1(double interval, const ClosedFormLaw& law, Quantity which) {
  law.validate();
  if (!(interval >= 0.0)) {
    throw DomainError("q1: interval must be non-negative (got " + std::to_string(interval) + ")");
  }
  if (interval == 0.0) return which == Quantity::pdf ? 0.0 : 1.0;
  if (std::isinf(interval)) return 0.0;
  const double scaled = law.c * law.c * interval / (law.L * law.L);
  return scaled >= kImageRegime ? q1_eigen(interval, law, which)
                                : q1_images(interval, law, which);
}

double q2(double abs_dprice, const ClosedFormLaw& law, Quantity which) {
  law.validate();
  if (!(abs_dprice >= 0.0)) {
    throw DomainError("q2: |dP| must be non-negative (got " + std::to_string(abs_dprice) + ")");
  }
  const double a = kPi * abs_dprice / law.L;
  if (which == Quantity::pdf) return 2.0 / (law.L * std::cosh(a));
  return 4.0 / kPi * std::atan(std::exp(-a));
}

double q2_series(double abs_dprice, const ClosedFormLaw& law, Quantity which) {
  law.validate();
  if (!(abs_dprice > 0.0)) throw DomainError("q2_series: |dP| must be positive");
  const double a = kPi * abs_dprice / law.L;
  double sum = 0.0;
  double sign = 1.0;
  for (int n = 1; n <= law.series_terms; ++n) {
    const double m = 2.0 * n - 1.0;
    const double decay = std::exp(-m * a);
    const double term = which == Quantity::pdf ? sign * decay : sign * decay / m;
    sum += term;
    if (std::abs(term) <= law.tolerance * std::abs(sum)) {
      return which == Quantity::pdf ? 4.0 / law.L * sum : 4.0 / kPi * sum;
    }
    sign = -sign;
  }
  series_failure("q2_series", law);
}

double moment(MomentKind kind, int k, const ClosedFormLaw& law) {
  law.validate();
  if (k < 1) throw RangeError("moment: k must be at least 1");
  const double kd = static_cast<double>(k);
  if (kind == MomentKind::interval) {
    if (k > kMaxEulerIndex) {
      throw RangeError("moment: interval moments are exact only for k <= " +
                       std::to_string(kMaxEulerIndex));
    }
    const double ratio = std::pow(law.L / law.c, 2.0 * kd);
    return ratio * std::tgamma(kd + 1.0) * static_cast<double>(euler_number(k)) /
           std::tgamma(2.0 * kd + 1.0);
  }
  if (k > 150) throw RangeError("moment: |dP| moments supported for k <= 150");
  return 4.0 * std::pow(law.L, kd) * std::tgamma(kd + 1.0) * dirichlet_beta(kd + 1.0) /
         std::pow(kPi, kd + 1.0);
}

double log_interval_moment(double order, const ClosedFormLaw& law) {
  law.validate();
  if (!(order > 0.0) || !std::isfinite(order)) {
    throw DomainError("interval_moment: order must be positive");
  }
  return std::log(4.0 / kPi) + std::lgamma(order + 1.0) +
         2.0 * order * std::log(2.0 * law.L / (law.c * kPi)) +
         std::log(dirichlet_beta(2.0 * order + 1.0));
}

double interval_moment(double order, const ClosedFormLaw& law) {
  return std::exp(log_interval_moment(order, law));
}

MeanVariance model1_mean_variance(const ClosedFormLaw& law) {
  law.validate();
  const double K = catalan();
  const double r2 = std::pow(law.L / law.c, 2);
  const double pi2 = kPi * kPi;
  return {
      r2 / 2.0,
      r2 * r2 / 6.0,
      4.0 * K * law.L / pi2,
      (0.25 - 16.0 * K * K / (pi2 * pi2)) * law.L * law.L,
  };
}

TailRates tail_rates(const ClosedFormLaw& law) {
  law.validate();
  return {std::pow(law.c * kPi / (2.0 * law.L), 2), kPi / law.L};
}

double solve_trend_coefficient(double beta, const ClosedFormLaw& law) {
  law.validate();
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw DomainError("solve_trend_coefficient: beta must be positive");
  }
  const double rounded = std::round(beta);
  if (rounded == beta && beta <= kMaxEulerIndex) {
    const int k = static_cast<int>(rounded);
    return std::pow(moment(MomentKind::interval, k, law), -1.0 / beta);
  }
  return std::exp(-log_interval_moment(beta, law) / beta);
}

double solve_tail_exponent(double d, const ClosedFormLaw& law) {
  law.validate();
  if (!(d != 0.0) || !std::isfinite(d)) {
    throw DomainError("solve_tail_exponent: d must be finite and nonzero");
  }
  const double log_d = std::log(std::abs(d));
  auto f = [&](double beta) { return beta * log_d + log_interval_moment(beta, law); };

  double lo = 1e-6;
  double hi = 64.0;
  double flo = f(lo);
  double fhi = f(hi);
  if (!(flo < 0.0 && fhi > 0.0)) {
    std::ostringstream os;
    os << "solve_tail_exponent: no root in [" << lo << ", " << hi << "] for d=" << d << " "
       << describe(law) << "; f(lo)=" << flo << ", f(hi)=" << fhi;
    throw NumericalError(os.str());
  }
  // Safeguarded secant: take the secant point when it falls well inside the
  // bracket, otherwise bisect.
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    double cand = lo - flo * (hi - lo) / (fhi - flo);
    const double margin = 0.05 * (hi - lo);
    if (!(cand > lo + margin && cand < hi - margin)) cand = 0.5 * (lo + hi);
    x = cand;
    const double fx = f(x);
    if (fx == 0.0) return x;
    if (fx < 0.0) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
      fhi = fx;
    }
    if (hi - lo <= 1e-13 * std::max(1.0, x)) return lo - flo * (hi - lo) / (fhi - flo);
  }
  throw NumericalError("solve_tail_exponent: no convergence for d=" + std::to_string(d));
}

double puck_b_mean(double d, const ClosedFormLaw& law) {
  law.validate();
  return 0.0 - d * std::pow(law.L / law.c, 2);
}

double diffusion_ratio(double d, const ClosedFormLaw& law) {
  law.validate();
  const double two_c2 = 2.0 * law.c * law.c;
  const double critical = two_c2 / (law.L * law.L);
  if (!(d < critical)) {
    std::ostringstream os;
    os << "diffusion_ratio: d=" << d << " is in the bubble regime (d >= 2c^2/L^2 = " << critical
       << ")";
    throw BubbleRegimeError(os.str());
  }
  return two_c2 / (two_c2 - d * law.L * law.L);
}

double density_u(double x, double y, double t, const ClosedFormLaw& law) {
  law.validate();
  if (!(y >= 0.0 && y <= 2.0 * law.L)) {
    throw DomainError("density_u: y must lie in [0, 2L] (got " + std::to_string(y) + ")");
  }
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("density_u: t must be positive");
  if (y == 0.0 || y == 2.0 * law.L) return 0.0;
  const double along =
      std::exp(-x * x / (law.c * law.c * t)) / (law.c * std::sqrt(kPi * t));
  const double scaled = law.c * law.c * t / (law.L * law.L);
  const double across =
      scaled >= kImageRegime ? kernel_eigen(y, t, law) : kernel_images(y, t, law);
  return along * across;
}

}  // namespace dealer
