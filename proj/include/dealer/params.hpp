#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace dealer {

// Trend term of the dealers' price update: d * <dP>_M * dt.
// A symmetric rule uses one coefficient; an asymmetric rule picks
// d_plus when <dP>_M >= 0 and d_minus otherwise.
struct TrendRule {
  double d_plus = 0.0;
  double d_minus = 0.0;

  static TrendRule none() { return {}; }
  static TrendRule symmetric(double d) { return {d, d}; }
  static TrendRule asymmetric(double d_plus, double d_minus) { return {d_plus, d_minus}; }

  bool active() const { return d_plus != 0.0 || d_minus != 0.0; }
  bool is_symmetric() const { return d_plus == d_minus; }
  double coefficient(double weighted_trend) const {
    return weighted_trend >= 0.0 ? d_plus : d_minus;
  }
};

struct SimParams {
  double L = 0.01;           // spread; |p1 - p2| >= L triggers a transaction
  double c = 0.01;           // noise amplitude (ignored when self_modulation is on)
  double dp = 0.01;          // elementary step of the dealers' random moves
  double dt = 1e-4;          // clock tick; must equal dp*dp unless allow_custom_dt
  TrendRule trend;           // d = 0 for Models 1 and 2
  int M = 1;                 // depth of the weighted moving average of price changes
  double tau = 150.0;        // self-modulation window, time units
  double clamp_lo = 3.0;     // bounds applied to the windowed mean interval
  double clamp_hi = 50.0;
  bool self_modulation = false;
  // Windowed mean interval used before the first transaction.
  // Defaults to sqrt(clamp_lo * clamp_hi) when unset.
  std::optional<double> bootstrap_interval;
  bool allow_combined = true;  // self_modulation together with a trend term
  bool allow_custom_dt = false;
  double p0 = 100.0;
  std::uint64_t seed = 1;
  std::uint64_t n_ticks = 1000;
  std::uint64_t max_steps_per_tick = 100'000'000;

  // Throws ConfigError naming the first violated constraint.
  void validate() const;

  double initial_mean_interval() const;
};

// Named parameter sets of the four model variants.
enum class Model { one, two, three, two_three };

Model parse_model(const std::string& text);
std::string to_string(Model model);

}  // namespace dealer
