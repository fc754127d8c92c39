#include "dealer/engine.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "dealer/errors.hpp"

namespace dealer {

namespace {

constexpr std::uint64_t kDealer1Bits = 0x5555555555555555ULL;
constexpr std::uint64_t kDealer2Bits = 0xAAAAAAAAAAAAAAAAULL;
constexpr int kStepsPerWord = 32;

std::int64_t transaction_threshold(double L, double unit) {
  if (!(unit > 0.0)) return 0;
  const double ratio = L / unit * (1.0 - 1e-12);
  if (!(ratio < 4e18)) return 0;
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(ratio)));
}

}  // namespace

std::vector<double> TickSeries::prices() const {
  std::vector<double> out;
  out.reserve(ticks.size() + 1);
  out.push_back(p0);
  for (const auto& tick : ticks) out.push_back(tick.price);
  return out;
}

std::vector<double> TickSeries::intervals() const {
  std::vector<double> out;
  out.reserve(ticks.size());
  for (const auto& tick : ticks) out.push_back(tick.interval);
  return out;
}

std::vector<double> TickSeries::dprices() const {
  std::vector<double> out;
  out.reserve(ticks.size());
  for (const auto& tick : ticks) out.push_back(tick.dprice);
  return out;
}

std::vector<double> TickSeries::abs_dprices() const {
  std::vector<double> out;
  out.reserve(ticks.size());
  for (const auto& tick : ticks) out.push_back(std::abs(tick.dprice));
  return out;
}

Representation parse_representation(const std::string& text) {
  if (text == "dealer") return Representation::dealer;
  if (text == "reduced") return Representation::reduced;
  throw ConfigError("representation must be 'dealer' or 'reduced' (got '" + text + "')");
}

double weighted_ma(std::span<const double> last_changes) {
  const auto M = static_cast<double>(last_changes.size());
  if (last_changes.empty()) throw ConfigError("M must be at least 1");
  double acc = 0.0;
  double weight = M;
  for (auto it = last_changes.rbegin(); it != last_changes.rend(); ++it) {
    acc += weight * *it;
    weight -= 1.0;
  }
  return 2.0 * acc / (M * (M + 1.0));
}

IntervalWindow window_mean_interval(std::span<const double> intervals, double tau) {
  if (intervals.empty()) throw DataError("window_mean_interval: no intervals recorded");
  double sum = 0.0;
  std::size_t count = 0;
  for (auto it = intervals.rbegin(); it != intervals.rend(); ++it) {
    if (sum + *it > tau) break;
    sum += *it;
    ++count;
  }
  if (count == 0) return {intervals.back(), 0};
  return {sum / static_cast<double>(count), count};
}

double modulated_c(std::span<const double> intervals, double tau, double L, double clamp_lo,
                   double clamp_hi, double bootstrap_mean) {
  double mean = intervals.empty() ? bootstrap_mean : window_mean_interval(intervals, tau).mean;
  mean = std::clamp(mean, clamp_lo, clamp_hi);
  return std::sqrt(0.5 * L * L / mean);
}

Simulation::Simulation(SimParams params, Representation repr)
    : params_(std::move(params)), repr_(repr) {
  params_.validate();
  rng_.seed(params_.seed);
  anchor_ = params_.p0;
  dp_history_.assign(static_cast<std::size_t>(params_.M), 0.0);
  update_amplitude();
  update_trend();
}

void Simulation::refill() {
  word_ = rng_();
  steps_left_ = kStepsPerWord;
}

void Simulation::advance(int steps) {
  const int nbits = 2 * steps;
  const std::uint64_t bits = nbits == 64 ? word_ : word_ & ((std::uint64_t{1} << nbits) - 1);
  word_ = nbits == 64 ? 0 : word_ >> nbits;
  steps_left_ -= steps;

  const std::int64_t up1 = std::popcount(bits & kDealer1Bits);
  const std::int64_t up2 = std::popcount(bits & kDealer2Bits);
  if (repr_ == Representation::dealer) {
    a_ += 2 * up1 - steps;
    b_ += 2 * up2 - steps;
  } else {
    a_ += 2 * (up1 - up2);
    b_ += 2 * (up1 + up2) - 2 * static_cast<std::int64_t>(steps);
  }
  steps_since_ += static_cast<std::uint64_t>(steps);
  total_steps_ += static_cast<std::uint64_t>(steps);
}

std::int64_t Simulation::gap_units() const {
  return repr_ == Representation::dealer ? a_ - b_ : a_;
}

std::int64_t Simulation::sum_units() const {
  return repr_ == Representation::dealer ? a_ + b_ : b_;
}

std::optional<TickRecord> Simulation::step() {
  if (steps_left_ == 0) refill();
  advance(1);
  return settle();
}

std::optional<TickRecord> Simulation::settle() {
  if (threshold_ > 0 && std::abs(gap_units()) >= threshold_) return transact();
  return std::nullopt;
}

TickRecord Simulation::next_tick() {
  const std::uint64_t budget = params_.max_steps_per_tick;
  while (true) {
    if (steps_since_ >= budget) {
      throw TimeoutError("no transaction within " + std::to_string(budget) +
                         " steps at tick " + std::to_string(n_ + 1));
    }
    if (steps_left_ == 0) refill();
    int r = steps_left_;
    if (threshold_ > 0) {
      // |gap| changes by at most 2 per step, so r steps cannot reach the
      // threshold while 2r < threshold - |gap|.
      const std::int64_t slack = threshold_ - std::abs(gap_units()) - 1;
      r = static_cast<int>(std::clamp<std::int64_t>(slack / 2, 1, steps_left_));
    }
    r = static_cast<int>(std::min<std::uint64_t>(static_cast<std::uint64_t>(r), budget - steps_since_));
    advance(r);
    if (auto rec = settle()) return *rec;
  }
}

TickRecord Simulation::transact() {
  const double shift = drift_per_step_ * static_cast<double>(steps_since_) +
                       unit_ * 0.5 * static_cast<double>(sum_units());
  const double price = anchor_ + shift;
  if (!std::isfinite(price)) {
    throw NumericalError("market price diverged at tick " + std::to_string(n_ + 1));
  }
  if (!(price > 0.0)) {
    throw PositivityError("market price " + std::to_string(price) + " is not positive at tick " +
                          std::to_string(n_ + 1));
  }

  TickRecord rec;
  rec.n = ++n_;
  rec.t = static_cast<double>(total_steps_) * params_.dt;
  rec.interval = static_cast<double>(steps_since_) * params_.dt;
  rec.price = price;
  rec.dprice = price - anchor_;

  anchor_ = price;
  last_tx_t_ = rec.t;
  a_ = 0;
  b_ = 0;
  steps_since_ = 0;

  dp_history_.erase(dp_history_.begin());
  dp_history_.push_back(rec.dprice);
  if (params_.self_modulation) interval_history_.push_back(rec.interval);

  update_amplitude();
  update_trend();
  return rec;
}

void Simulation::update_amplitude() {
  if (params_.self_modulation) {
    c_eff_ = modulated_c(interval_history_, params_.tau, params_.L, params_.clamp_lo,
                         params_.clamp_hi, params_.initial_mean_interval());
    if (!interval_history_.empty()) {
      // Intervals that left the window never re-enter it.
      const std::size_t keep =
          std::max<std::size_t>(1, window_mean_interval(interval_history_, params_.tau).count);
      if (interval_history_.size() > 2 * keep + 64) {
        interval_history_.erase(interval_history_.begin(),
                                interval_history_.end() - static_cast<std::ptrdiff_t>(keep));
      }
    }
  } else {
    c_eff_ = params_.c;
  }
  unit_ = c_eff_ * params_.dp;
  threshold_ = transaction_threshold(params_.L, unit_);
}

void Simulation::update_trend() {
  wma_ = weighted_ma(dp_history_);
  drift_per_step_ = params_.trend.coefficient(wma_) * wma_ * params_.dt;
}

void Simulation::set_trend(const TrendRule& trend) {
  params_.trend = trend;
  params_.validate();
  update_trend();
}

void Simulation::place_dealers(double p1, double p2) {
  if (!(unit_ > 0.0)) throw ConfigError("place_dealers: zero noise amplitude has no lattice");
  const double base = anchor_ + drift_per_step_ * static_cast<double>(steps_since_);
  auto to_units = [&](double p) {
    const double u = (p - base) / unit_;
    const double k = std::round(u);
    if (std::abs(u - k) > 1e-6) {
      throw ConfigError("place_dealers: price " + std::to_string(p) + " is off the lattice");
    }
    return static_cast<std::int64_t>(k);
  };
  const std::int64_t k1 = to_units(p1);
  const std::int64_t k2 = to_units(p2);
  if (repr_ == Representation::dealer) {
    a_ = k1;
    b_ = k2;
  } else {
    a_ = k1 - k2;
    b_ = k1 + k2;
  }
}

double Simulation::p1() const {
  const std::int64_t k1 = repr_ == Representation::dealer ? a_ : (b_ + a_) / 2;
  return anchor_ + drift_per_step_ * static_cast<double>(steps_since_) +
         unit_ * static_cast<double>(k1);
}

double Simulation::p2() const {
  const std::int64_t k2 = repr_ == Representation::dealer ? b_ : (b_ - a_) / 2;
  return anchor_ + drift_per_step_ * static_cast<double>(steps_since_) +
         unit_ * static_cast<double>(k2);
}

double Simulation::spread_gap() const { return unit_ * static_cast<double>(gap_units()); }

double Simulation::midpoint_shift() const {
  return drift_per_step_ * static_cast<double>(steps_since_) +
         unit_ * 0.5 * static_cast<double>(sum_units());
}

double Simulation::t() const { return static_cast<double>(total_steps_) * params_.dt; }

TickSeries run(const SimParams& params, Representation repr) {
  Simulation sim(params, repr);
  TickSeries series;
  series.p0 = params.p0;
  series.ticks.reserve(static_cast<std::size_t>(params.n_ticks));
  for (std::uint64_t i = 0; i < params.n_ticks; ++i) series.ticks.push_back(sim.next_tick());
  return series;
}

namespace {

void put_number(std::ostream& out, double x) {
  char buf[40];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", x);
  out.write(buf, len);
}

double parse_number(const std::string& field, std::size_t line) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = first + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw DataError("tick csv line " + std::to_string(line) + ": bad number '" + field + "'");
  }
  return value;
}

}  // namespace

void write_ticks_csv(std::ostream& out, const TickSeries& series) {
  out << "n,t,price,interval,dprice\n";
  for (const auto& tick : series.ticks) {
    out << tick.n << ',';
    put_number(out, tick.t);
    out << ',';
    put_number(out, tick.price);
    out << ',';
    put_number(out, tick.interval);
    out << ',';
    put_number(out, tick.dprice);
    out << '\n';
  }
}

TickSeries read_ticks_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("tick csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "n,t,price,interval,dprice") {
    throw DataError("tick csv: unexpected header '" + line + "'");
  }
  TickSeries series;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 5) {
      throw DataError("tick csv line " + std::to_string(lineno) + ": expected 5 fields");
    }
    TickRecord rec;
    rec.n = static_cast<std::uint64_t>(parse_number(fields[0], lineno));
    rec.t = parse_number(fields[1], lineno);
    rec.price = parse_number(fields[2], lineno);
    rec.interval = parse_number(fields[3], lineno);
    rec.dprice = parse_number(fields[4], lineno);
    series.ticks.push_back(rec);
  }
  if (!series.ticks.empty()) series.p0 = series.ticks.front().price - series.ticks.front().dprice;
  return series;
}

}  // namespace dealer
