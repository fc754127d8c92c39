#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "dealer/errors.hpp"
#include "dealer/harness.hpp"

using namespace dealer;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("dealersim_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string error_of(const OptionMap& flags, const std::optional<fs::path>& file = std::nullopt) {
  try {
    parse_config(flags, file);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::string value_of(const KeyValues& kv, const std::string& key) {
  for (const auto& [k, v] : kv) {
    if (k == key) return v;
  }
  return {};
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("model 1 plan from flags") {
  const auto plan = parse_config({{"model", "1"}, {"ticks", "1000"}, {"seed", "7"}});
  CHECK(plan.model == Model::one);
  CHECK(plan.params.n_ticks == 1000);
  CHECK(plan.params.seed == 7);
  CHECK_FALSE(plan.params.trend.active());
  CHECK_FALSE(plan.params.self_modulation);
  CHECK(plan.params.dt == doctest::Approx(1e-4));
  CHECK(run(plan.params) == run(parse_config({{"model", "1"}, {"ticks", "1000"}, {"seed", "7"}}).params));
}

TEST_CASE("defaults") {
  const auto plan = parse_config({});
  const auto& p = plan.params;
  CHECK(p.L == 0.01);
  CHECK(p.c == 0.01);
  CHECK(p.dp == 0.01);
  CHECK(p.tau == 150.0);
  CHECK(p.clamp_lo == 3.0);
  CHECK(p.clamp_hi == 50.0);
  CHECK(p.M == 1);
  CHECK(plan.representation == Representation::dealer);
  CHECK(parse_config({{"dp", "0.02"}}).params.dt == doctest::Approx(4e-4));
}

TEST_CASE("model defaults") {
  auto p2 = parse_config({{"model", "2"}}).params;
  CHECK(p2.self_modulation);
  CHECK_FALSE(p2.trend.active());
  auto p3 = parse_config({{"model", "3"}}).params;
  CHECK(p3.trend.d_plus == 1.25);
  CHECK(p3.trend.is_symmetric());
  auto asym = parse_config({{"model", "3"}, {"d-plus", "1"}, {"d-minus", "-1"}, {"M", "10"}}).params;
  CHECK(asym.trend.d_plus == 1.0);
  CHECK(asym.trend.d_minus == -1.0);
  CHECK(asym.M == 10);
  auto both = parse_config({{"model", "2+3"}, {"d", "0.5"}}).params;
  CHECK(both.self_modulation);
  CHECK(both.trend.d_plus == 0.5);
  CHECK(error_of({{"model", "2+3"}, {"combined", "false"}}).find("allow_combined") !=
        std::string::npos);
  CHECK(error_of({{"model", "1"}, {"d", "1"}}).find("d") != std::string::npos);
  CHECK(!error_of({{"model", "3"}, {"d", "1"}, {"d-plus", "1"}, {"d-minus", "1"}}).empty());
  CHECK(!error_of({{"model", "3"}, {"d-plus", "1"}}).empty());
  CHECK(!error_of({{"model", "4"}}).empty());
}

TEST_CASE("flags override the config file") {
  const auto dir = scratch("config");
  const auto file = dir / "run.kv";
  std::ofstream(file) << "# trend follower\nmodel = 3\nd=1.0\nticks=50\n\n";
  CHECK(parse_config({}, file).params.trend.d_plus == 1.0);
  const auto plan = parse_config({{"d", "-1.0"}}, file);
  CHECK(plan.params.trend.d_plus == -1.0);
  CHECK(plan.params.n_ticks == 50);

  std::ofstream(dir / "bad.kv") << "model=3\nspread=2\n";
  CHECK(error_of({}, dir / "bad.kv").find("spread") != std::string::npos);
  std::ofstream(dir / "broken.kv") << "model\n";
  CHECK_THROWS_AS(parse_config({}, dir / "broken.kv"), ConfigError);
  CHECK_THROWS_AS(parse_config({}, dir / "missing.kv"), ConfigError);
}

TEST_CASE("configuration errors name the key") {
  CHECK(error_of({{"bogus", "1"}}).find("bogus") != std::string::npos);
  CHECK(error_of({{"L", "wide"}}).find("'L'") != std::string::npos);
  CHECK(error_of({{"ticks", "-5"}}).find("ticks") != std::string::npos);
  CHECK(error_of({{"L", "-1"}}) == "L must be positive");
  CHECK(error_of({{"allow-custom-dt", "maybe"}}).find("allow-custom-dt") != std::string::npos);
}

TEST_CASE("dt must equal dp squared unless overridden") {
  const auto msg = error_of({{"dt", "0.5"}, {"dp", "0.01"}});
  CHECK(msg.find("dt must equal dp*dp") != std::string::npos);
  const auto plan = parse_config({{"dt", "0.5"}, {"dp", "0.01"}, {"allow-custom-dt", "true"}});
  CHECK(plan.params.dt == 0.5);
}

TEST_CASE("default output directory follows the environment") {
  ::setenv(kOutputDirEnv, "/tmp/dealersim_env_out", 1);
  CHECK(default_output_dir() == fs::path("/tmp/dealersim_env_out"));
  CHECK(parse_config({}).out_dir == fs::path("/tmp/dealersim_env_out"));
  CHECK(parse_config({{"out", "elsewhere"}}).out_dir == fs::path("elsewhere"));
  ::unsetenv(kOutputDirEnv);
  CHECK(default_output_dir() == fs::current_path());
}

TEST_CASE("key=value round trip") {
  const KeyValues kv = {{"a", "1"}, {"b.c", "x y"}, {"d", format_double(0.1)}};
  std::stringstream buf;
  write_key_values(buf, kv);
  CHECK(buf.str() == "a=1\nb.c=x y\nd=0.10000000000000001\n");
  CHECK(read_key_values(buf) == kv);
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(-INFINITY) == "-inf");
}

TEST_CASE("oracle output") {
  OracleRequest req;
  req.beta = 3.0;
  req.d = 2.0;
  req.interval = 0.5;
  const auto kv = oracle_values(req);
  CHECK(std::stod(value_of(kv, "mean_interval")) == 0.5);
  CHECK(std::stod(value_of(kv, "trend_coefficient")) == doctest::Approx(1.2531).epsilon(1e-3));
  CHECK(std::stod(value_of(kv, "tail_exponent")) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(value_of(kv, "bubble_regime") == "1");
  CHECK(value_of(kv, "diffusion_ratio") == "inf");
  CHECK(std::stod(value_of(kv, "q1_ccdf")) == doctest::Approx(0.37077743).epsilon(1e-7));
  CHECK(value_of(kv, "interval_moment_4") != "");
  CHECK(value_of(kv, "q2_pdf") == "");
}

TEST_CASE("slices and schedules") {
  SimParams p;
  p.M = 3;
  const TrendSegment schedule[] = {{TrendRule::symmetric(-1.0), 300}, {TrendRule::none(), 200}};
  const auto s = run_schedule(p, schedule);
  CHECK(s.size() == 500);
  const auto tail = slice(s, 500, 200);
  CHECK(tail.size() == 200);
  CHECK(tail.p0 == s.ticks[299].price);
  CHECK(tail.ticks.front() == s.ticks[300]);
  CHECK(slice(s, 100, 100).p0 == s.p0);
  CHECK_THROWS_AS(slice(s, 501, 10), DataError);

  SimParams q = p;
  q.trend = TrendRule::symmetric(-1.0);
  q.n_ticks = 300;
  const auto head = run(q);
  CHECK(std::equal(head.ticks.begin(), head.ticks.end(), s.ticks.begin()));
}

TEST_CASE("bubble shape of an exponential path") {
  TickSeries s;
  s.p0 = 100.0;
  for (int i = 1; i <= 1000; ++i) {
    const double t = 0.5 * i;
    s.ticks.push_back({static_cast<std::uint64_t>(i), t, 99.0 + std::exp(0.004 * t), 0.5, 0.0});
  }
  const auto b = bubble_shape(s, 100);
  CHECK(b.windows_above == 1.0);
  CHECK(b.log_r2 > 0.99);
  CHECK(b.growth_rate > 0.0);

  TickSeries crash = s;
  for (auto& r : crash.ticks) r.price = 200.0 - r.price;
  const auto c = bubble_shape(crash, 100);
  CHECK(c.windows_above == 0.0);
  CHECK(std::isnan(c.log_r2));
}

TEST_CASE("checks and reports") {
  Check rel{{"q", 1.0, 0.05, Comparison::relative, Provenance::published}, 1.04};
  CHECK(rel.passed());
  rel.measured = 1.06;
  CHECK_FALSE(rel.passed());
  Check above{{"q", 1.0, 0.0, Comparison::above, Provenance::derived}, 1.0};
  CHECK_FALSE(above.passed());
  Check least{{"q", 1.0, 0.0, Comparison::at_least, Provenance::derived}, 1.0};
  CHECK(least.passed());
  Check nan{{"q", 1.0, 0.5, Comparison::absolute, Provenance::derived}, std::nan("")};
  CHECK_FALSE(nan.passed());
  CHECK(to_string(Provenance::published) == "published");
  CHECK(to_string(Comparison::below) == "below");

  ExperimentReport r;
  r.preset = "x";
  r.checks = {rel};
  CHECK_FALSE(r.passed());
  const auto kv = r.to_key_values();
  CHECK(value_of(kv, "check.q.source") == "published");
  CHECK(value_of(kv, "check.q.pass") == "false");
  CHECK(value_of(kv, "pass") == "false");
}

TEST_CASE("presets") {
  CHECK(preset_names().size() == 5);
  for (const auto& name : preset_names()) {
    const auto p = find_preset(name);
    CHECK(p.name == name);
    CHECK_FALSE(p.expected.empty());
    CHECK_NOTHROW(p.params.validate());
  }
  CHECK(find_preset("fig10").params.trend.d_plus == 1.25);
  CHECK(find_preset("fig11").params.M == 10);
  CHECK(find_preset("fig12").params.trend.d_plus == 2.0);
  CHECK_THROWS_AS(find_preset("fig99"), ConfigError);
}

TEST_CASE("experiments are byte-for-byte reproducible") {
  for (const std::string name : {"fig2", "fig11"}) {
    const auto a = scratch(name + "_a");
    const auto b = scratch(name + "_b");
    const std::optional<std::uint64_t> ticks =
        name == "fig2" ? std::optional<std::uint64_t>(20000) : std::nullopt;
    const auto ra = run_experiment(name, 3, a, ticks);
    const auto rb = run_experiment(name, 3, b, ticks);
    CHECK(ra.to_key_values() == rb.to_key_values());
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
      ++files;
      const auto other = b / entry.path().filename();
      REQUIRE(fs::exists(other));
      CHECK(slurp(entry.path()) == slurp(other));
    }
    CHECK(files >= 3);
    CHECK(fs::exists(a / "ticks.csv"));
    CHECK(fs::exists(a / "report.kv"));
    const auto report = slurp(a / "report.kv");
    CHECK(report.find("source=published") != std::string::npos);
    CHECK(report.find("\npass=") != std::string::npos);
  }
}

TEST_CASE("analysis files") {
  SimParams p;
  p.n_ticks = 5000;
  p.M = 10;
  p.trend = TrendRule::symmetric(-1.0);
  const auto s = run(p);
  SimParams q = p;
  q.trend = TrendRule::none();
  const auto ref = run(q);
  AnalysisOptions opt;
  opt.M = 10;
  opt.reference = &ref;
  const auto dir = scratch("analysis");
  const auto summary = analyze(s, opt, dir);
  CHECK(slurp(dir / "dist.csv").rfind("x,pdf,ccdf\n", 0) == 0);
  CHECK(slurp(dir / "dist_interval.csv").rfind("x,pdf,ccdf\n", 0) == 0);
  CHECK(slurp(dir / "potential.csv").rfind("x,mean_dp,count,fit\n", 0) == 0);
  std::ifstream in(dir / "summary.kv");
  CHECK(read_key_values(in) == summary);
  CHECK(value_of(summary, "ticks") == "5000");
  CHECK(std::stod(value_of(summary, "sigma_ratio_mean")) < 1.0);
  CHECK(value_of(summary, "hill_exponent") == "nan");

  const auto tiny = analyze(TickSeries{100.0, {}}, AnalysisOptions{}, scratch("empty"));
  CHECK(value_of(tiny, "mean_interval") == "nan");
}

}  // TEST_SUITE
