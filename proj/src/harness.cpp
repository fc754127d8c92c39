#include "dealer/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "dealer/closedform.hpp"
#include "dealer/errors.hpp"

namespace dealer {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = text.find_last_not_of(" \t\r");
  return text.substr(first, last - first + 1);
}

double parse_real(const std::string& key, const std::string& text) {
  double value = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError("invalid value for '" + key + "': '" + text + "' is not a number");
  }
  return value;
}

std::uint64_t parse_count(const std::string& key, const std::string& text) {
  std::uint64_t value = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError("invalid value for '" + key + "': '" + text +
                      "' is not a non-negative integer");
  }
  return value;
}

bool parse_flag(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("invalid value for '" + key + "': '" + text + "' is not a boolean");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

template <class Fn>
double guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const DataError&) {
    return kNaN;
  } catch (const DomainError&) {
    return kNaN;
  }
}

using Numbers = std::vector<std::pair<std::string, double>>;

double lookup(const Numbers& numbers, const std::string& key) {
  for (const auto& [k, v] : numbers) {
    if (k == key) return v;
  }
  return kNaN;
}

KeyValues to_key_values(const Numbers& numbers) {
  KeyValues out;
  out.reserve(numbers.size());
  for (const auto& [k, v] : numbers) out.emplace_back(k, format_double(v));
  return out;
}

Numbers summary_numbers(const TickSeries& series, const AnalysisOptions& options) {
  Numbers out;
  out.emplace_back("ticks", static_cast<double>(series.size()));
  const auto intervals = series.intervals();
  const auto abs_dp = series.abs_dprices();

  const auto moments = [&](const std::string& name, const std::vector<double>& xs) {
    MomentSummary m{kNaN, kNaN, kNaN};
    if (xs.size() >= 2) m = summarize(xs);
    out.emplace_back("mean_" + name, m.mean);
    out.emplace_back("var_" + name, m.variance);
    out.emplace_back("cv_" + name, m.cv);
    return m;
  };
  const auto im = moments("interval", intervals);
  out.emplace_back("interval_ccdf_5mean", guarded([&] {
                     return empirical_ccdf(intervals)(5.0 * im.mean);
                   }));
  moments("abs_dprice", abs_dp);

  out.emplace_back("interval_rate", guarded([&] {
                     return fit_exponential_rate(intervals, options.tail_fraction);
                   }));
  out.emplace_back("dprice_rate", guarded([&] {
                     return fit_exponential_rate(abs_dp, options.tail_fraction);
                   }));

  HillEstimate hill{kNaN, 0, kNaN, kNaN, kNaN, false};
  try {
    hill = hill_tail_exponent(abs_dp, options.hill_fraction);
  } catch (const DataError&) {
  }
  out.emplace_back("hill_exponent", hill.exponent);
  out.emplace_back("hill_drift", hill.drift);
  out.emplace_back("hill_power_law", hill.power_law_plausible ? 1.0 : 0.0);
  out.emplace_back("loglog_slope", guarded([&] {
                     return loglog_ccdf_slope(abs_dp, options.hill_fraction);
                   }));

  double e_mean = kNaN;
  if (!series.empty()) {
    const auto e = e_series(series, options.tau);
    if (e.size() >= 2) e_mean = summarize(e).mean;
  }
  out.emplace_back("e_mean", e_mean);

  PuckSlope puck{{kNaN, kNaN, kNaN, 0}, kNaN};
  try {
    puck = puck_slope(series, options.M);
  } catch (const DataError&) {
  }
  out.emplace_back("puck_slope", puck.fit.slope);
  out.emplace_back("puck_slope_stderr", puck.fit.slope_stderr);
  out.emplace_back("puck_b_est", puck.b_est);

  PotentialFit pot;
  bool have_pot = false;
  try {
    auto popt = options.potential;
    popt.window = std::min<std::size_t>(popt.window, series.size());
    pot = potential_curve(series, options.M, popt);
    have_pot = true;
  } catch (const DataError&) {
  }
  out.emplace_back("potential_a", have_pot ? pot.a_joint : kNaN);
  out.emplace_back("potential_a_left", have_pot ? pot.a_left : kNaN);
  out.emplace_back("potential_a_right", have_pot ? pot.a_right : kNaN);
  out.emplace_back("potential_noise_floor", have_pot ? pot.noise_floor() : kNaN);
  out.emplace_back("potential_b_est", have_pot ? pot.b_est : kNaN);

  const auto sigmas = [&](const TickSeries& s) {
    std::vector<double> sig(options.lags.size(), kNaN);
    try {
      sig = diffusion_sigma(s.prices(), options.lags);
    } catch (const DataError&) {
    }
    return sig;
  };
  const auto sig = sigmas(series);
  for (std::size_t i = 0; i < options.lags.size(); ++i) {
    out.emplace_back("sigma_" + std::to_string(options.lags[i]), sig[i]);
  }
  if (options.reference) {
    const auto ref = sigmas(*options.reference);
    double sum = 0.0;
    for (std::size_t i = 0; i < options.lags.size(); ++i) {
      const double r = sig[i] / ref[i];
      out.emplace_back("sigma_ratio_" + std::to_string(options.lags[i]), r);
      sum += r;
    }
    out.emplace_back("sigma_ratio_mean",
                     options.lags.empty() ? kNaN : sum / static_cast<double>(options.lags.size()));
  }
  return out;
}

double quantile(std::vector<double> xs, double q) {
  std::sort(xs.begin(), xs.end());
  const auto i = static_cast<std::size_t>(q * static_cast<double>(xs.size() - 1));
  return xs[i];
}

void write_ticks(const fs::path& path, const TickSeries& series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_ticks_csv(out, series);
}

void write_kv(const fs::path& path, const KeyValues& values) {
  std::ostringstream os;
  write_key_values(os, values);
  write_text(path, os.str());
}

void collect_checks(const Numbers& measured, const std::vector<Expectation>& expected,
                    std::vector<Check>& checks) {
  for (const auto& e : expected) checks.push_back({e, lookup(measured, e.quantity)});
}

ExperimentPreset make_preset(std::string name, std::string description, Model model,
                             std::uint64_t ticks) {
  ExperimentPreset p;
  p.name = std::move(name);
  p.description = std::move(description);
  p.model = model;
  p.params.n_ticks = ticks;
  return p;
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_key_values(std::ostream& out, const KeyValues& values) {
  for (const auto& [k, v] : values) out << k << '=' << v << '\n';
}

KeyValues read_key_values(std::istream& in) {
  KeyValues out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("line " + std::to_string(number) + ": expected key=value");
    }
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "model", "L",     "c",    "dp",  "dt",             "tau",
      "clamp-lo", "clamp-hi", "d", "d-plus", "d-minus",  "M",
      "ticks", "seed",  "p0",   "out", "representation", "allow-custom-dt",
      "combined", "bootstrap-interval", "max-steps"};
  return keys;
}

OptionMap read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  OptionMap out;
  try {
    for (auto& [k, v] : read_key_values(in)) out[k] = v;
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return out;
}

RunPlan parse_config(const OptionMap& flags, const std::optional<fs::path>& config_file) {
  OptionMap merged;
  if (config_file) merged = read_config_file(*config_file);
  for (const auto& [k, v] : flags) merged[k] = v;

  const auto& known = config_keys();
  for (const auto& [k, v] : merged) {
    if (std::find(known.begin(), known.end(), k) == known.end()) {
      throw ConfigError("unknown key '" + k + "'");
    }
  }

  const auto get = [&](const std::string& key) -> const std::string* {
    auto it = merged.find(key);
    return it == merged.end() ? nullptr : &it->second;
  };

  RunPlan plan;
  if (auto v = get("model")) plan.model = parse_model(*v);
  if (auto v = get("representation")) plan.representation = parse_representation(*v);

  SimParams& p = plan.params;
  const auto real = [&](const char* key, double& field) {
    if (auto v = get(key)) field = parse_real(key, *v);
  };
  real("L", p.L);
  real("c", p.c);
  real("dp", p.dp);
  real("tau", p.tau);
  real("clamp-lo", p.clamp_lo);
  real("clamp-hi", p.clamp_hi);
  real("p0", p.p0);
  if (auto v = get("dt")) {
    p.dt = parse_real("dt", *v);
  } else {
    p.dt = p.dp * p.dp;
  }
  if (auto v = get("M")) {
    const auto m = parse_count("M", *v);
    if (m < 1 || m > 100000) throw ConfigError("M must be at least 1");
    p.M = static_cast<int>(m);
  }
  if (auto v = get("ticks")) p.n_ticks = parse_count("ticks", *v);
  if (auto v = get("seed")) p.seed = parse_count("seed", *v);
  if (auto v = get("max-steps")) p.max_steps_per_tick = parse_count("max-steps", *v);
  if (auto v = get("bootstrap-interval")) {
    p.bootstrap_interval = parse_real("bootstrap-interval", *v);
  }
  if (auto v = get("allow-custom-dt")) p.allow_custom_dt = parse_flag("allow-custom-dt", *v);
  if (auto v = get("combined")) p.allow_combined = parse_flag("combined", *v);

  const bool has_d = get("d") != nullptr;
  const bool has_plus = get("d-plus") != nullptr;
  const bool has_minus = get("d-minus") != nullptr;
  const bool trend_model = plan.model == Model::three || plan.model == Model::two_three;
  if ((has_d || has_plus || has_minus) && !trend_model) {
    throw ConfigError("d, d-plus and d-minus apply only to models 3 and 2+3");
  }
  if (has_d && (has_plus || has_minus)) {
    throw ConfigError("d cannot be combined with d-plus/d-minus");
  }
  if (has_plus != has_minus) throw ConfigError("d-plus and d-minus must be given together");

  p.self_modulation = plan.model == Model::two || plan.model == Model::two_three;
  if (trend_model) {
    if (has_d) {
      p.trend = TrendRule::symmetric(parse_real("d", *get("d")));
    } else if (has_plus) {
      p.trend = TrendRule::asymmetric(parse_real("d-plus", *get("d-plus")),
                                      parse_real("d-minus", *get("d-minus")));
    } else {
      p.trend = TrendRule::symmetric(1.25);
    }
  }
  p.validate();

  if (auto v = get("out")) {
    plan.out_dir = *v;
  } else {
    plan.out_dir = default_output_dir();
  }
  return plan;
}

fs::path default_output_dir() {
  const char* env = std::getenv(kOutputDirEnv);
  if (env && *env) return fs::path(env);
  return fs::current_path();
}

KeyValues summarize_series(const TickSeries& series, const AnalysisOptions& options) {
  return to_key_values(summary_numbers(series, options));
}

void write_distribution_csv(std::ostream& out, std::span<const double> samples, std::size_t bins) {
  out << "x,pdf,ccdf\n";
  if (samples.size() < 2) return;
  std::vector<double> xs(samples.begin(), samples.end());
  const double lo = *std::min_element(xs.begin(), xs.end());
  const double hi = quantile(xs, 0.999);
  if (!(hi > lo)) return;
  const auto hist = make_histogram(xs, bins, lo, hi);
  const auto ccdf = empirical_ccdf(xs);
  const auto centers = hist.centers();
  const auto density = hist.density();
  for (std::size_t i = 0; i < centers.size(); ++i) {
    out << format_double(centers[i]) << ',' << format_double(density[i]) << ','
        << format_double(ccdf(centers[i])) << '\n';
  }
}

void write_potential_csv(std::ostream& out, const PotentialFit& fit, bool symmetric) {
  out << "x,mean_dp,count,fit\n";
  for (std::size_t i = 0; i < fit.centers.size(); ++i) {
    if (!fit.fitted[i]) continue;
    const double x = fit.centers[i];
    const double a = symmetric ? fit.a_joint : (x < 0.0 ? fit.a_left : fit.a_right);
    out << format_double(x) << ',' << format_double(fit.mean_dp[i]) << ',' << fit.counts[i] << ','
        << format_double(a * x * x) << '\n';
  }
}

KeyValues analyze(const TickSeries& series, const AnalysisOptions& options, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const auto summary = summarize_series(series, options);
  {
    std::ostringstream os;
    write_distribution_csv(os, series.abs_dprices(), options.dist_bins);
    write_text(out_dir / "dist.csv", os.str());
  }
  {
    std::ostringstream os;
    write_distribution_csv(os, series.intervals(), options.dist_bins);
    write_text(out_dir / "dist_interval.csv", os.str());
  }
  {
    std::ostringstream os;
    try {
      auto popt = options.potential;
      popt.window = std::min<std::size_t>(popt.window, series.size());
      write_potential_csv(os, potential_curve(series, options.M, popt), popt.symmetric);
    } catch (const DataError&) {
      os.str("");
      os << "x,mean_dp,count,fit\n";
    }
    write_text(out_dir / "potential.csv", os.str());
  }
  write_kv(out_dir / "summary.kv", summary);
  return summary;
}

KeyValues oracle_values(const OracleRequest& request) {
  ClosedFormLaw law;
  law.L = request.L;
  law.c = request.c;
  law.validate();

  Numbers out;
  out.emplace_back("L", law.L);
  out.emplace_back("c", law.c);
  const auto mv = model1_mean_variance(law);
  out.emplace_back("mean_interval", mv.mean_interval);
  out.emplace_back("var_interval", mv.var_interval);
  out.emplace_back("mean_abs_dprice", mv.mean_abs_dprice);
  out.emplace_back("var_abs_dprice", mv.var_abs_dprice);
  const auto rates = tail_rates(law);
  out.emplace_back("interval_rate", rates.interval_rate);
  out.emplace_back("dprice_rate", rates.dprice_rate);
  out.emplace_back("catalan", catalan());
  for (int k = 1; k <= std::min(request.moments, kMaxEulerIndex); ++k) {
    out.emplace_back("interval_moment_" + std::to_string(k), moment(MomentKind::interval, k, law));
  }
  for (int k = 1; k <= request.moments; ++k) {
    out.emplace_back("abs_dprice_moment_" + std::to_string(k),
                     moment(MomentKind::abs_dprice, k, law));
  }
  if (request.interval) {
    out.emplace_back("q1_pdf", q1(*request.interval, law, Quantity::pdf));
    out.emplace_back("q1_ccdf", q1(*request.interval, law, Quantity::ccdf));
  }
  if (request.abs_dprice) {
    out.emplace_back("q2_pdf", q2(*request.abs_dprice, law, Quantity::pdf));
    out.emplace_back("q2_ccdf", q2(*request.abs_dprice, law, Quantity::ccdf));
  }
  if (request.beta) {
    out.emplace_back("trend_coefficient", solve_trend_coefficient(*request.beta, law));
  }
  if (request.d) {
    const double d = *request.d;
    double beta = kNaN;
    try {
      beta = solve_tail_exponent(d, law);
    } catch (const NumericalError&) {
    }
    out.emplace_back("tail_exponent", beta);
    out.emplace_back("puck_b_mean", puck_b_mean(d, law));
    try {
      out.emplace_back("diffusion_ratio", diffusion_ratio(d, law));
      out.emplace_back("bubble_regime", 0.0);
    } catch (const BubbleRegimeError&) {
      out.emplace_back("diffusion_ratio", std::numeric_limits<double>::infinity());
      out.emplace_back("bubble_regime", 1.0);
    }
  }
  return to_key_values(out);
}

std::string to_string(Provenance source) {
  return source == Provenance::published ? "published" : "derived";
}

std::string to_string(Comparison comparison) {
  switch (comparison) {
    case Comparison::relative: return "relative";
    case Comparison::absolute: return "absolute";
    case Comparison::above: return "above";
    case Comparison::below: return "below";
    case Comparison::at_least: return "at_least";
  }
  return "?";
}

bool Check::passed() const {
  const double m = measured;
  const double t = expected.target;
  switch (expected.comparison) {
    case Comparison::relative: return std::abs(m - t) <= expected.tolerance * std::abs(t);
    case Comparison::absolute: return std::abs(m - t) <= expected.tolerance;
    case Comparison::above: return m > t;
    case Comparison::below: return m < t;
    case Comparison::at_least: return m >= t;
  }
  return false;
}

bool ExperimentReport::passed() const {
  if (!error.empty()) return false;
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed(); });
}

KeyValues ExperimentReport::to_key_values() const {
  KeyValues out;
  out.emplace_back("preset", preset);
  out.emplace_back("seed", std::to_string(seed));
  out.emplace_back("ticks", std::to_string(ticks));
  for (const auto& c : checks) {
    const std::string k = "check." + c.expected.quantity + ".";
    out.emplace_back(k + "measured", format_double(c.measured));
    out.emplace_back(k + "target", format_double(c.expected.target));
    out.emplace_back(k + "tolerance", format_double(c.expected.tolerance));
    out.emplace_back(k + "comparison", to_string(c.expected.comparison));
    out.emplace_back(k + "source", to_string(c.expected.source));
    out.emplace_back(k + "pass", c.passed() ? "true" : "false");
  }
  for (const auto& [k, v] : info) out.emplace_back("info." + k, v);
  if (!error.empty()) out.emplace_back("error", error);
  out.emplace_back("pass", passed() ? "true" : "false");
  return out;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"fig2", "fig7-8", "fig10", "fig11", "fig12"};
  return names;
}

ExperimentPreset find_preset(const std::string& name) {
  const ClosedFormLaw law;
  const auto P = Provenance::published;
  const auto D = Provenance::derived;
  if (name == "fig2") {
    auto p = make_preset(name, "Model-1 interval and price-change distributions", Model::one,
                         100'000);
    const auto mv = model1_mean_variance(law);
    const auto rates = tail_rates(law);
    p.expected = {
        {"mean_interval", mv.mean_interval, 0.05, Comparison::relative, P},
        {"var_interval", mv.var_interval, 0.10, Comparison::relative, P},
        {"mean_abs_dprice", mv.mean_abs_dprice, 0.05, Comparison::relative, P},
        {"var_abs_dprice", mv.var_abs_dprice, 0.10, Comparison::relative, P},
        {"interval_rate", rates.interval_rate, 0.10, Comparison::relative, D},
        {"dprice_rate", rates.dprice_rate, 0.10, Comparison::relative, D},
    };
    return p;
  }
  if (name == "fig7-8") {
    auto p = make_preset(name, "Model-2 self-modulated intervals", Model::two, 20'000);
    p.params.self_modulation = true;
    p.expected = {
        {"cv_interval", 1.0, 0.0, Comparison::above, P},
        {"interval_ccdf_5mean", std::exp(-5.0), 0.0, Comparison::above, P},
        {"e_mean", 1.0, 0.05, Comparison::relative, P},
    };
    return p;
  }
  if (name == "fig10") {
    auto p = make_preset(name, "Model-3 power-law price changes, d = 1.25, M = 1", Model::three,
                         1'000'000);
    p.params.trend = TrendRule::symmetric(1.25);
    p.expected = {{"hill_exponent", 3.0, 0.5, Comparison::absolute, P}};
    return p;
  }
  if (name == "fig11") {
    auto p = make_preset(name, "Market potential over the d = -1, 0, +1, +-1 schedule, M = 10",
                         Model::three, 4000);
    p.params.M = 10;
    p.params.trend = TrendRule::symmetric(-1.0);
    p.expected = {
        {"segment1_a", 0.0, 0.0, Comparison::above, P},
        {"segment2_a_over_noise_floor", 1.0, 0.0, Comparison::below, P},
        {"segment3_a", 0.0, 0.0, Comparison::below, P},
        {"segment4_a_left", 0.0, 0.0, Comparison::above, P},
        {"segment4_a_right", 0.0, 0.0, Comparison::below, P},
    };
    return p;
  }
  if (name == "fig12") {
    auto p = make_preset(name, "Bubble regime, d = 2.0, M = 10", Model::three, 2000);
    p.params.M = 10;
    p.params.trend = TrendRule::symmetric(2.0);
    p.expected = {
        {"windows_above_start", 0.95, 0.0, Comparison::at_least, P},
        {"log_fit_r2", 0.9, 0.0, Comparison::at_least, D},
        {"bubble_regime_flagged", 1.0, 0.0, Comparison::at_least, P},
    };
    return p;
  }
  std::string known;
  for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
}

TickSeries run_schedule(const SimParams& params, std::span<const TrendSegment> segments) {
  Simulation sim(params);
  TickSeries out;
  out.p0 = params.p0;
  for (const auto& seg : segments) {
    sim.set_trend(seg.trend);
    for (std::uint64_t i = 0; i < seg.ticks; ++i) out.ticks.push_back(sim.next_tick());
  }
  return out;
}

TickSeries slice(const TickSeries& series, std::size_t end, std::size_t count) {
  if (end > series.size() || count > end) throw DataError("slice: range outside the series");
  TickSeries out;
  const std::size_t begin = end - count;
  out.p0 = begin == 0 ? series.p0 : series.ticks[begin - 1].price;
  out.ticks.assign(series.ticks.begin() + static_cast<std::ptrdiff_t>(begin),
                   series.ticks.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

BubbleShape bubble_shape(const TickSeries& series, std::size_t window) {
  if (window == 0) throw DomainError("bubble_shape: window must be positive");
  BubbleShape out;
  const std::size_t n = series.size();
  std::size_t windows = 0, above = 0;
  for (std::size_t w = 0; w + window <= n; w += window) {
    ++windows;
    bool all = true;
    for (std::size_t i = w; i < w + window; ++i) all = all && series.ticks[i].price > series.p0;
    above += all;
  }
  out.windows_above = windows ? static_cast<double>(above) / static_cast<double>(windows) : kNaN;

  std::vector<double> t, y;
  for (const auto& r : series.ticks) {
    const double v = r.price - series.p0 + 1.0;
    if (!(v > 0.0)) {
      out.log_r2 = kNaN;
      out.growth_rate = kNaN;
      return out;
    }
    t.push_back(r.t);
    y.push_back(std::log(v));
  }
  if (t.size() < 3) {
    out.log_r2 = kNaN;
    out.growth_rate = kNaN;
    return out;
  }
  const auto fit = least_squares(t, y);
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss = 0.0, rss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * t[i];
    ss += (y[i] - mean) * (y[i] - mean);
    rss += r * r;
  }
  out.log_r2 = ss > 0.0 ? 1.0 - rss / ss : kNaN;
  out.growth_rate = fit.slope;
  return out;
}

ExperimentReport run_experiment(const std::string& name, std::uint64_t seed, const fs::path& out_dir,
                                std::optional<std::uint64_t> ticks) {
  auto preset = find_preset(name);
  SimParams params = preset.params;
  params.seed = seed;
  if (ticks) params.n_ticks = *ticks;
  params.validate();
  fs::create_directories(out_dir);

  ExperimentReport report;
  report.preset = name;
  report.seed = seed;
  report.ticks = params.n_ticks;

  const ClosedFormLaw law{params.L, params.c};
  AnalysisOptions aopt;
  aopt.M = params.M;
  aopt.tau = params.tau;
  Numbers measured;
  TickSeries series;
  series.p0 = params.p0;

  try {
    if (name == "fig11") {
      if (params.n_ticks % 4 != 0 || params.n_ticks < 4 * 600) {
        throw ConfigError("fig11 needs a multiple of 4 ticks, at least 2400");
      }
      const std::uint64_t seg = params.n_ticks / 4;
      const TrendSegment schedule[] = {{TrendRule::symmetric(-1.0), seg},
                                       {TrendRule::none(), seg},
                                       {TrendRule::symmetric(1.0), seg},
                                       {TrendRule::asymmetric(1.0, -1.0), seg}};
      series = run_schedule(params, schedule);
      const double d_of[] = {-1.0, 0.0, 1.0, kNaN};
      for (int g = 0; g < 4; ++g) {
        const std::size_t end = static_cast<std::size_t>(seg) * (g + 1);
        PotentialOptions popt;
        popt.symmetric = g != 3;
        popt.window = 500;
        const auto upto = slice(series, end, end);
        const auto fit = potential_curve(upto, params.M, popt);
        const auto puck = puck_slope(slice(series, end, 500), params.M);
        const std::string s = "segment" + std::to_string(g + 1);
        if (g == 0 || g == 2) measured.emplace_back(s + "_a", fit.a_joint);
        if (g == 1) measured.emplace_back(s + "_a_over_noise_floor",
                                          std::abs(fit.a_joint) / fit.noise_floor());
        if (g == 3) {
          measured.emplace_back(s + "_a_left", fit.a_left);
          measured.emplace_back(s + "_a_right", fit.a_right);
        }
        report.info.emplace_back(s + "_a", format_double(fit.a_joint));
        report.info.emplace_back(s + "_noise_floor", format_double(fit.noise_floor()));
        report.info.emplace_back(s + "_curve_b_est", format_double(fit.b_est));
        report.info.emplace_back(s + "_puck_b_est", format_double(puck.b_est));
        if (!std::isnan(d_of[g])) {
          report.info.emplace_back(s + "_b_mean_theory", format_double(puck_b_mean(d_of[g], law)));
        }
        std::ostringstream os;
        write_potential_csv(os, fit, popt.symmetric);
        write_text(out_dir / ("potential_" + std::to_string(g + 1) + ".csv"), os.str());
      }
    } else if (name == "fig12") {
      Simulation sim(params);
      try {
        for (std::uint64_t i = 0; i < params.n_ticks; ++i) series.ticks.push_back(sim.next_tick());
      } catch (const PositivityError& e) {
        report.error = std::string("engine stopped after ") +
                       std::to_string(series.size()) + " ticks: " + e.what();
      }
      const auto shape = bubble_shape(series, 100);
      measured.emplace_back("windows_above_start", shape.windows_above);
      measured.emplace_back("log_fit_r2", shape.log_r2);
      double flagged = 0.0;
      try {
        diffusion_ratio(params.trend.d_plus, law);
      } catch (const BubbleRegimeError&) {
        flagged = 1.0;
      }
      measured.emplace_back("bubble_regime_flagged", flagged);
      report.info.emplace_back("growth_rate_per_time", format_double(shape.growth_rate));
      report.info.emplace_back("guide_rate", format_double(0.004));
      if (!series.empty()) {
        report.info.emplace_back("final_price", format_double(series.ticks.back().price));
        report.info.emplace_back("final_t", format_double(series.ticks.back().t));
      }
    } else {
      series = run(params);
      if (name == "fig10") {
        report.info.emplace_back("tail_exponent_theory",
                                 format_double(solve_tail_exponent(1.25, law)));
      }
    }
  } catch (const TimeoutError& e) {
    report.error = e.what();
  }

  write_ticks(out_dir / "ticks.csv", series);
  if (name != "fig11" && name != "fig12") {
    measured = summary_numbers(series, aopt);
    analyze(series, aopt, out_dir);
    if (name == "fig10") {
      for (const char* key : {"hill_drift", "loglog_slope"}) {
        report.info.emplace_back(key, format_double(lookup(measured, key)));
      }
    }
  }
  collect_checks(measured, preset.expected, report.checks);
  write_kv(out_dir / "report.kv", report.to_key_values());
  return report;
}

}  // namespace dealer
