// dealersim: simulate, analyze and check the two-dealer market models.
//
// Exit status: 0 success, 1 an experiment check failed, 2 bad configuration,
// 3 runtime error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "dealer/errors.hpp"
#include "dealer/harness.hpp"

namespace fs = std::filesystem;
using namespace dealer;

namespace {

struct SimFlags {
  std::map<std::string, std::string> values;
  std::optional<std::string> config;
};

void add_sim_flags(CLI::App& app, SimFlags& flags) {
  const std::pair<const char*, const char*> options[] = {
      {"model", "Model variant: 1, 2, 3 or 2+3"},
      {"L", "Spread (price units)"},
      {"c", "Noise amplitude"},
      {"dp", "Elementary price step"},
      {"dt", "Clock tick; must equal dp*dp unless --allow-custom-dt"},
      {"tau", "Self-modulation window"},
      {"clamp-lo", "Lower clamp of the windowed mean interval"},
      {"clamp-hi", "Upper clamp of the windowed mean interval"},
      {"d", "Trend coefficient (models 3 and 2+3)"},
      {"d-plus", "Trend coefficient when the average change is >= 0"},
      {"d-minus", "Trend coefficient when the average change is < 0"},
      {"M", "Depth of the weighted moving average"},
      {"ticks", "Number of transactions"},
      {"seed", "RNG seed"},
      {"p0", "Initial price"},
      {"out", "Output directory"},
      {"representation", "dealer or reduced"},
      {"bootstrap-interval", "Windowed mean interval before the first transaction"},
      {"max-steps", "Step budget per transaction"},
      {"combined", "Allow self-modulation together with a trend (true/false)"},
  };
  for (const auto& [name, help] : options) {
    const std::string key = name;
    app.add_option_function<std::string>(
        "--" + key, [&flags, key](const std::string& v) { flags.values[key] = v; }, help);
  }
  app.add_flag_callback(
      "--allow-custom-dt", [&flags] { flags.values["allow-custom-dt"] = "true"; },
      "Accept dt different from dp*dp");
  app.add_option_function<std::string>(
      "--config", [&flags](const std::string& v) { flags.config = v; },
      "Flat key=value config file; flags override it");
}

RunPlan plan_from(const SimFlags& flags) {
  std::optional<fs::path> file;
  if (flags.config) file = *flags.config;
  return parse_config(flags.values, file);
}

int cmd_simulate(const SimFlags& flags) {
  const auto plan = plan_from(flags);
  fs::create_directories(plan.out_dir);
  const auto series = run(plan.params, plan.representation);
  const auto path = plan.out_dir / "ticks.csv";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_ticks_csv(out, series);
  std::cout << "model=" << to_string(plan.model) << '\n'
            << "ticks=" << series.size() << '\n'
            << "path=" << path.string() << '\n';
  return 0;
}

TickSeries load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return read_ticks_csv(in);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-dealer market simulator and analysis toolkit"};
  app.require_subcommand(1);

  SimFlags sim_flags;
  auto* simulate = app.add_subcommand("simulate", "Run a model and write ticks.csv");
  add_sim_flags(*simulate, sim_flags);

  std::string in_path;
  std::optional<std::string> reference_path;
  std::optional<std::string> analyze_out;
  AnalysisOptions aopt;
  bool asymmetric = false;
  auto* analyze_cmd = app.add_subcommand("analyze", "Estimate distributions, tails and potentials");
  analyze_cmd->add_option("ticks", in_path, "Tick CSV")->required();
  analyze_cmd->add_option("--M", aopt.M, "Moving-average depth of the PUCK estimators");
  analyze_cmd->add_option("--tau", aopt.tau, "Window of e(n)");
  analyze_cmd->add_option("--window", aopt.potential.window, "Ticks used by the potential fit");
  analyze_cmd->add_option("--bins", aopt.potential.bins, "Bins of the potential fit");
  analyze_cmd->add_option("--dist-bins", aopt.dist_bins, "Bins of dist.csv");
  analyze_cmd->add_flag("--asymmetric", asymmetric, "Fit each side of the potential separately");
  analyze_cmd->add_option("--reference", reference_path, "Tick CSV of a d = 0 run for sigma ratios");
  analyze_cmd->add_option("--out", analyze_out, "Output directory");

  OracleRequest oracle_req;
  std::optional<double> oracle_interval, oracle_dprice, oracle_beta, oracle_d;
  auto* oracle = app.add_subcommand("oracle", "Print closed-form quantities as key=value lines");
  oracle->add_option("--L", oracle_req.L, "Spread");
  oracle->add_option("--c", oracle_req.c, "Noise amplitude");
  oracle->add_option("--interval", oracle_interval, "Evaluate the interval law here");
  oracle->add_option("--abs-dprice", oracle_dprice, "Evaluate the |dP| law here");
  oracle->add_option("--beta", oracle_beta, "Trend coefficient for this tail exponent");
  oracle->add_option("--d", oracle_d, "Tail exponent, mean potential and diffusion ratio for d");
  oracle->add_option("--moments", oracle_req.moments, "Number of raw moments")
      ->check(CLI::Range(1, 12));

  std::string preset;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> ticks;
  std::optional<std::string> experiment_out;
  auto* experiment = app.add_subcommand("experiment", "Run a preset and check it");
  experiment->add_option("name", preset, "fig2, fig7-8, fig10, fig11 or fig12")->required();
  experiment->add_option("--seed", seed, "RNG seed");
  experiment->add_option("--ticks", ticks, "Override the preset's tick count");
  experiment->add_option("--out", experiment_out, "Output directory (default $DEALERSIM_OUT/<name>)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*simulate) return cmd_simulate(sim_flags);

    if (*analyze_cmd) {
      const auto series = load(in_path);
      std::optional<TickSeries> reference;
      if (reference_path) {
        reference = load(*reference_path);
        aopt.reference = &*reference;
      }
      aopt.potential.symmetric = !asymmetric;
      const fs::path out = analyze_out ? fs::path(*analyze_out) : default_output_dir();
      write_key_values(std::cout, analyze(series, aopt, out));
      return 0;
    }

    if (*oracle) {
      oracle_req.interval = oracle_interval;
      oracle_req.abs_dprice = oracle_dprice;
      oracle_req.beta = oracle_beta;
      oracle_req.d = oracle_d;
      write_key_values(std::cout, oracle_values(oracle_req));
      return 0;
    }

    if (*experiment) {
      const fs::path out = experiment_out ? fs::path(*experiment_out) : default_output_dir() / preset;
      const auto report = run_experiment(preset, seed, out, ticks);
      write_key_values(std::cout, report.to_key_values());
      return report.passed() ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
