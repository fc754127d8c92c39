#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dealer/params.hpp"

namespace dealer {

struct TickRecord {
  std::uint64_t n = 0;
  double t = 0.0;
  double price = 0.0;
  double interval = 0.0;
  double dprice = 0.0;

  friend bool operator==(const TickRecord&, const TickRecord&) = default;
};

struct TickSeries {
  double p0 = 0.0;
  std::vector<TickRecord> ticks;

  std::size_t size() const { return ticks.size(); }
  bool empty() const { return ticks.empty(); }

  std::vector<double> prices() const;          // P(0), P(1), ..., P(N)
  std::vector<double> intervals() const;       // I(1), ..., I(N)
  std::vector<double> dprices() const;         // dP(1), ..., dP(N)
  std::vector<double> abs_dprices() const;

  friend bool operator==(const TickSeries&, const TickSeries&) = default;
};

// dealer: the two mid-prices p1, p2 are the state.
// reduced: the pair (D, dG) = (p1 - p2, midpoint displacement) is the state.
enum class Representation { dealer, reduced };

Representation parse_representation(const std::string& text);

// Linearly weighted moving average of the last M price changes,
// newest last: 2/(M(M+1)) * sum_k (M-k) dP(n-k). M is the span length.
double weighted_ma(std::span<const double> last_changes);

struct IntervalWindow {
  double mean = 0.0;
  std::size_t count = 0;  // intervals lying entirely within the last tau
};

// Mean of the most recent intervals whose cumulative length (newest first)
// stays within tau. When the newest interval alone exceeds tau the mean is
// that interval and count is 0. Intervals are ordered oldest first; the
// span must not be empty.
IntervalWindow window_mean_interval(std::span<const double> intervals, double tau);

// Self-modulated noise amplitude sqrt((L^2/2) / <I>_tau) with <I>_tau clamped
// to [clamp_lo, clamp_hi]. An empty history uses bootstrap_mean instead.
double modulated_c(std::span<const double> intervals, double tau, double L, double clamp_lo,
                   double clamp_hi, double bootstrap_mean);

// Two-dealer market on an exact lattice.
//
// Between transactions each dealer's mid-price is
//   p_i = P(n) + drift * steps + unit * k_i,   unit = c_eff * dp,
// with integer k_i, so p1 - p2 and the midpoint are computed exactly in both
// representations. The transaction condition |p1 - p2| >= L becomes
// |k1 - k2| >= ceil(L / unit) (up to a 1e-12 relative slack on the ratio).
//
// Random stream: std::mt19937_64 seeded with params.seed. Each 64-bit output
// drives 32 consecutive dt-steps; step j of a word reads bit 2j for dealer 1
// and bit 2j+1 for dealer 2, a set bit meaning +dp.
class Simulation {
public:
  explicit Simulation(SimParams params, Representation repr = Representation::dealer);

  // One dt: both dealers move, then the transaction condition is checked.
  std::optional<TickRecord> step();

  // Runs dt-steps until the next transaction. Consumes the random stream
  // exactly as repeated step() calls would. Throws TimeoutError after
  // params.max_steps_per_tick steps without a transaction.
  TickRecord next_tick();

  // Transaction check alone (the second half of step()).
  std::optional<TickRecord> settle();

  // Puts the dealers at the given mid-prices. Each must lie on the current
  // lattice around the last market price.
  void place_dealers(double p1, double p2);

  // Replaces the trend rule from the next dt-step on.
  void set_trend(const TrendRule& trend);

  const SimParams& params() const { return params_; }
  Representation representation() const { return repr_; }

  double p1() const;
  double p2() const;
  double spread_gap() const;        // D = p1 - p2
  double midpoint_shift() const;    // dG = (p1 + p2)/2 - P(n)
  double t() const;
  double last_transaction_t() const { return last_tx_t_; }
  double last_price() const { return anchor_; }
  std::uint64_t n() const { return n_; }
  double noise_amplitude() const { return c_eff_; }
  double trend_average() const { return wma_; }
  std::span<const double> dp_history() const { return dp_history_; }
  std::span<const double> interval_history() const { return interval_history_; }

private:
  void refill();
  void advance(int steps);
  std::int64_t gap_units() const;
  std::int64_t sum_units() const;
  TickRecord transact();
  void update_amplitude();
  void update_trend();

  SimParams params_;
  Representation repr_;
  std::mt19937_64 rng_;
  std::uint64_t word_ = 0;
  int steps_left_ = 0;

  // dealer: (k1, k2); reduced: (k1 - k2, k1 + k2)
  std::int64_t a_ = 0;
  std::int64_t b_ = 0;

  double anchor_ = 0.0;
  double c_eff_ = 0.0;
  double unit_ = 0.0;
  std::int64_t threshold_ = 0;  // 0 means no transaction is reachable
  double wma_ = 0.0;
  double drift_per_step_ = 0.0;

  std::uint64_t steps_since_ = 0;
  std::uint64_t total_steps_ = 0;
  double last_tx_t_ = 0.0;
  std::uint64_t n_ = 0;

  std::vector<double> dp_history_;        // last M changes, newest last
  std::vector<double> interval_history_;  // newest last, trimmed to the tau window
};

// Runs until params.n_ticks transactions have occurred.
TickSeries run(const SimParams& params, Representation repr = Representation::dealer);

// CSV with header n,t,price,interval,dprice; 17 significant digits, LF endings.
void write_ticks_csv(std::ostream& out, const TickSeries& series);
TickSeries read_ticks_csv(std::istream& in);

}  // namespace dealer
