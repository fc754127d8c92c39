#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dealer/engine.hpp"
#include "dealer/params.hpp"
#include "dealer/stats.hpp"

namespace dealer {

// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "DEALERSIM_OUT";

// Ordered key=value pairs, written one per line.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

void write_key_values(std::ostream& out, const KeyValues& values);
KeyValues read_key_values(std::istream& in);

std::string format_double(double value);

// Option name (without the leading dashes) -> raw text.
using OptionMap = std::map<std::string, std::string>;

// Keys accepted on the command line and in config files.
const std::vector<std::string>& config_keys();

// Flat key=value file; '#' starts a comment, blank lines are skipped.
OptionMap read_config_file(const std::filesystem::path& path);

struct RunPlan {
  Model model = Model::one;
  SimParams params;
  Representation representation = Representation::dealer;
  std::filesystem::path out_dir;
};

// Merges flags over the optional config file (flags win), applies the model
// defaults and validates. Throws ConfigError naming the offending key.
//
// Model defaults: 1 has no trend and fixed c; 2 turns on self-modulation;
// 3 uses d = 1.25 unless d or d-plus/d-minus is given; 2+3 combines both.
RunPlan parse_config(const OptionMap& flags,
                     const std::optional<std::filesystem::path>& config_file = std::nullopt);

// $DEALERSIM_OUT if set and non-empty, else the current directory.
std::filesystem::path default_output_dir();

// ---- analysis ----

struct AnalysisOptions {
  int M = 1;                      // depth of the trend average used by the PUCK estimators
  double tau = 150.0;             // window of e(n)
  std::size_t dist_bins = 60;
  double tail_fraction = 0.1;     // exponential-rate fits
  double hill_fraction = 0.01;
  PotentialOptions potential;
  std::vector<std::size_t> lags = {64, 128, 256};
  const TickSeries* reference = nullptr;  // d = 0 run for sigma ratios
};

// Summary statistics of a tick series. Estimators without enough data
// report nan.
KeyValues summarize_series(const TickSeries& series, const AnalysisOptions& options);

// Writes dist.csv (|dP|), dist_interval.csv, potential.csv and summary.kv
// into out_dir and returns the summary.
KeyValues analyze(const TickSeries& series, const AnalysisOptions& options,
                  const std::filesystem::path& out_dir);

// x,pdf,ccdf at bin centers.
void write_distribution_csv(std::ostream& out, std::span<const double> samples, std::size_t bins);

// x,mean_dp,count,fit for bins that reached the minimum occupancy.
void write_potential_csv(std::ostream& out, const PotentialFit& fit, bool symmetric);

// ---- oracle ----

struct OracleRequest {
  double L = 0.01;
  double c = 0.01;
  std::optional<double> interval;    // evaluate q1 here
  std::optional<double> abs_dprice;  // evaluate q2 here
  std::optional<double> beta;        // trend coefficient for this tail exponent
  std::optional<double> d;           // tail exponent, <b>, diffusion ratio for this d
  int moments = 4;                   // raw moments 1..moments of both laws
};

KeyValues oracle_values(const OracleRequest& request);

// ---- experiments ----

enum class Provenance { published, derived };
// relative: |m - t| <= tol |t|; absolute: |m - t| <= tol;
// above: m > t; below: m < t; at_least: m >= t.
enum class Comparison { relative, absolute, above, below, at_least };

std::string to_string(Provenance source);
std::string to_string(Comparison comparison);

struct Expectation {
  std::string quantity;
  double target = 0.0;
  double tolerance = 0.0;  // used by relative and absolute only
  Comparison comparison = Comparison::relative;
  Provenance source = Provenance::derived;
};

struct Check {
  Expectation expected;
  double measured = 0.0;

  bool passed() const;
};

struct ExperimentPreset {
  std::string name;
  std::string description;
  Model model = Model::one;
  SimParams params;
  std::vector<Expectation> expected;
};

const std::vector<std::string>& preset_names();

// Throws ConfigError for an unknown name.
ExperimentPreset find_preset(const std::string& name);

struct ExperimentReport {
  std::string preset;
  std::uint64_t seed = 0;
  std::uint64_t ticks = 0;
  std::vector<Check> checks;
  KeyValues info;            // measured quantities without a pass criterion
  std::string error;         // set when the run stopped on an engine error

  bool passed() const;
  KeyValues to_key_values() const;
};

// Segments of a trend schedule run back to back in one simulation.
struct TrendSegment {
  TrendRule trend;
  std::uint64_t ticks = 0;
};

TickSeries run_schedule(const SimParams& params, std::span<const TrendSegment> segments);

// Last `count` ticks ending at tick `end` (exclusive), with p0 set to the
// price just before the first of them.
TickSeries slice(const TickSeries& series, std::size_t end, std::size_t count);

// Fraction of consecutive windows whose prices all stay strictly above p0,
// and R^2 of log(P - p0 + 1) against t (nan when some P <= p0 - 1).
struct BubbleShape {
  double windows_above = 0.0;
  double log_r2 = 0.0;
  double growth_rate = 0.0;  // slope of log(P - p0 + 1) against t
};

BubbleShape bubble_shape(const TickSeries& series, std::size_t window = 100);

// Runs the preset with the given seed (and tick override), writes ticks.csv,
// the analysis files and report.kv into out_dir.
ExperimentReport run_experiment(const std::string& name, std::uint64_t seed,
                                const std::filesystem::path& out_dir,
                                std::optional<std::uint64_t> ticks = std::nullopt);

}  // namespace dealer
