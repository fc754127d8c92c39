#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dealer/closedform.hpp"
#include "dealer/engine.hpp"
#include "dealer/errors.hpp"
#include "dealer/harness.hpp"
#include "dealer/params.hpp"
#include "dealer/stats.hpp"

namespace py = pybind11;
using namespace dealer;

namespace {

py::array_t<double> to_array(std::vector<double> values) {
  py::array_t<double> out(static_cast<py::ssize_t>(values.size()));
  std::copy(values.begin(), values.end(), out.mutable_data());
  return out;
}

std::vector<double> to_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  return std::vector<double>(a.data(), a.data() + a.size());
}

ClosedFormLaw make_law(double L, double c) {
  ClosedFormLaw law;
  law.L = L;
  law.c = c;
  law.validate();
  return law;
}

Quantity parse_quantity(const std::string& which) {
  if (which == "pdf") return Quantity::pdf;
  if (which == "ccdf") return Quantity::ccdf;
  throw ConfigError("which must be 'pdf' or 'ccdf'");
}

MomentKind parse_kind(const std::string& kind) {
  if (kind == "interval") return MomentKind::interval;
  if (kind == "abs_dprice") return MomentKind::abs_dprice;
  throw ConfigError("kind must be 'interval' or 'abs_dprice'");
}

py::dict key_values_dict(const KeyValues& values) {
  py::dict out;
  for (const auto& [k, v] : values) out[py::str(k)] = v;
  return out;
}

py::dict fit_dict(const LinearFit& fit) {
  py::dict d;
  d["slope"] = fit.slope;
  d["intercept"] = fit.intercept;
  d["slope_stderr"] = fit.slope_stderr;
  d["n"] = fit.n;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Two-dealer market simulator core";

  auto base = py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  auto domain = py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<BubbleRegimeError>(m, "BubbleRegimeError", domain.ptr());
  py::register_exception<RangeError>(m, "RangeError", PyExc_IndexError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<PositivityError>(m, "PositivityError", PyExc_RuntimeError);
  py::register_exception<TimeoutError>(m, "TimeoutError", PyExc_TimeoutError);
  (void)base;

  // ---- parameters ----

  py::class_<TrendRule>(m, "TrendRule")
      .def(py::init<>())
      .def_static("none", &TrendRule::none)
      .def_static("symmetric", &TrendRule::symmetric, py::arg("d"))
      .def_static("asymmetric", &TrendRule::asymmetric, py::arg("d_plus"), py::arg("d_minus"))
      .def_readwrite("d_plus", &TrendRule::d_plus)
      .def_readwrite("d_minus", &TrendRule::d_minus)
      .def_property_readonly("active", &TrendRule::active)
      .def_property_readonly("is_symmetric", &TrendRule::is_symmetric)
      .def("__repr__", [](const TrendRule& t) {
        return "TrendRule(d_plus=" + format_double(t.d_plus) +
               ", d_minus=" + format_double(t.d_minus) + ")";
      });

  py::class_<SimParams>(m, "SimParams")
      .def(py::init<>())
      .def_readwrite("L", &SimParams::L)
      .def_readwrite("c", &SimParams::c)
      .def_readwrite("dp", &SimParams::dp)
      .def_readwrite("dt", &SimParams::dt)
      .def_readwrite("trend", &SimParams::trend)
      .def_readwrite("M", &SimParams::M)
      .def_readwrite("tau", &SimParams::tau)
      .def_readwrite("clamp_lo", &SimParams::clamp_lo)
      .def_readwrite("clamp_hi", &SimParams::clamp_hi)
      .def_readwrite("self_modulation", &SimParams::self_modulation)
      .def_readwrite("bootstrap_interval", &SimParams::bootstrap_interval)
      .def_readwrite("allow_combined", &SimParams::allow_combined)
      .def_readwrite("allow_custom_dt", &SimParams::allow_custom_dt)
      .def_readwrite("p0", &SimParams::p0)
      .def_readwrite("seed", &SimParams::seed)
      .def_readwrite("n_ticks", &SimParams::n_ticks)
      .def_readwrite("max_steps_per_tick", &SimParams::max_steps_per_tick)
      .def("validate", &SimParams::validate)
      .def("initial_mean_interval", &SimParams::initial_mean_interval);

  m.def(
      "params_for",
      [](const std::string& model, const std::map<std::string, std::string>& options) {
        OptionMap flags(options.begin(), options.end());
        flags["model"] = model;
        return parse_config(flags).params;
      },
      py::arg("model"), py::arg("options") = std::map<std::string, std::string>{},
      "Parameters of a named model variant, with overrides given as CLI-style key strings.");

  // ---- engine ----

  py::class_<TickRecord>(m, "TickRecord")
      .def_readonly("n", &TickRecord::n)
      .def_readonly("t", &TickRecord::t)
      .def_readonly("price", &TickRecord::price)
      .def_readonly("interval", &TickRecord::interval)
      .def_readonly("dprice", &TickRecord::dprice)
      .def("__repr__", [](const TickRecord& r) {
        return "TickRecord(n=" + std::to_string(r.n) + ", t=" + format_double(r.t) +
               ", price=" + format_double(r.price) + ")";
      });

  py::class_<TickSeries>(m, "TickSeries")
      .def(py::init<>())
      .def_readwrite("p0", &TickSeries::p0)
      .def_readonly("ticks", &TickSeries::ticks)
      .def("__len__", &TickSeries::size)
      .def("prices", [](const TickSeries& s) { return to_array(s.prices()); })
      .def("intervals", [](const TickSeries& s) { return to_array(s.intervals()); })
      .def("dprices", [](const TickSeries& s) { return to_array(s.dprices()); })
      .def("abs_dprices", [](const TickSeries& s) { return to_array(s.abs_dprices()); })
      .def("times", [](const TickSeries& s) {
        std::vector<double> t;
        t.reserve(s.size());
        for (const auto& r : s.ticks) t.push_back(r.t);
        return to_array(std::move(t));
      })
      .def("__eq__", [](const TickSeries& a, const TickSeries& b) { return a == b; });

  py::class_<Simulation>(m, "Simulation")
      .def(py::init([](const SimParams& p, const std::string& repr) {
             return Simulation(p, parse_representation(repr));
           }),
           py::arg("params"), py::arg("representation") = "dealer")
      .def("step", &Simulation::step)
      .def("next_tick", &Simulation::next_tick)
      .def("set_trend", &Simulation::set_trend)
      .def_property_readonly("p1", &Simulation::p1)
      .def_property_readonly("p2", &Simulation::p2)
      .def_property_readonly("t", &Simulation::t)
      .def_property_readonly("n", &Simulation::n)
      .def_property_readonly("last_price", &Simulation::last_price)
      .def_property_readonly("noise_amplitude", &Simulation::noise_amplitude)
      .def_property_readonly("trend_average", &Simulation::trend_average);

  m.def(
      "run",
      [](const SimParams& p, const std::string& repr) {
        py::gil_scoped_release release;
        return run(p, parse_representation(repr));
      },
      py::arg("params"), py::arg("representation") = "dealer");

  m.def(
      "run_schedule",
      [](const SimParams& p, const std::vector<std::pair<TrendRule, std::uint64_t>>& segments) {
        std::vector<TrendSegment> segs;
        for (const auto& [trend, ticks] : segments) segs.push_back({trend, ticks});
        py::gil_scoped_release release;
        return run_schedule(p, segs);
      },
      py::arg("params"), py::arg("segments"));

  m.def("weighted_ma", [](py::array_t<double, py::array::c_style | py::array::forcecast> x) {
    auto v = to_vector(x);
    return weighted_ma(v);
  });

  m.def(
      "modulated_c",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> intervals, double tau,
         double L, double lo, double hi, double bootstrap) {
        auto v = to_vector(intervals);
        return modulated_c(v, tau, L, lo, hi, bootstrap);
      },
      py::arg("intervals"), py::arg("tau"), py::arg("L"), py::arg("clamp_lo"),
      py::arg("clamp_hi"), py::arg("bootstrap_mean"));

  // ---- closed forms ----

  m.def("euler_number", &euler_number, py::arg("k"));
  m.def("dirichlet_beta", &dirichlet_beta, py::arg("s"));
  m.def(
      "q1",
      [](double x, double L, double c, const std::string& which) {
        return q1(x, make_law(L, c), parse_quantity(which));
      },
      py::arg("interval"), py::arg("L") = 0.01, py::arg("c") = 0.01, py::arg("which") = "pdf");
  m.def(
      "q2",
      [](double x, double L, double c, const std::string& which) {
        return q2(x, make_law(L, c), parse_quantity(which));
      },
      py::arg("abs_dprice"), py::arg("L") = 0.01, py::arg("c") = 0.01, py::arg("which") = "pdf");
  m.def(
      "moment",
      [](const std::string& kind, int k, double L, double c) {
        return moment(parse_kind(kind), k, make_law(L, c));
      },
      py::arg("kind"), py::arg("k"), py::arg("L") = 0.01, py::arg("c") = 0.01);
  m.def(
      "interval_moment",
      [](double order, double L, double c) { return interval_moment(order, make_law(L, c)); },
      py::arg("order"), py::arg("L") = 0.01, py::arg("c") = 0.01);
  m.def(
      "model1_mean_variance",
      [](double L, double c) {
        auto mv = model1_mean_variance(make_law(L, c));
        py::dict d;
        d["mean_interval"] = mv.mean_interval;
        d["var_interval"] = mv.var_interval;
        d["mean_abs_dprice"] = mv.mean_abs_dprice;
        d["var_abs_dprice"] = mv.var_abs_dprice;
        return d;
      },
      py::arg("L") = 0.01, py::arg("c") = 0.01);
  m.def(
      "tail_rates",
      [](double L, double c) {
        auto r = tail_rates(make_law(L, c));
        return py::make_tuple(r.interval_rate, r.dprice_rate);
      },
      py::arg("L") = 0.01, py::arg("c") = 0.01);
  m.def(
      "solve_trend_coefficient",
      [](double beta, double L, double c) { return solve_trend_coefficient(beta, make_law(L, c)); },
      py::arg("beta"), py::arg("L") = 0.01, py::arg("c") = 0.01);
  m.def(
      "solve_tail_exponent",
      [](double d, double L, double c) { return solve_tail_exponent(d, make_law(L, c)); },
      py::arg("d"), py::arg("L") = 0.01, py::arg("c") = 0.01);
  m.def(
      "puck_b_mean", [](double d, double L, double c) { return puck_b_mean(d, make_law(L, c)); },
      py::arg("d"), py::arg("L") = 0.01, py::arg("c") = 0.01);
  m.def(
      "diffusion_ratio",
      [](double d, double L, double c) { return diffusion_ratio(d, make_law(L, c)); },
      py::arg("d"), py::arg("L") = 0.01, py::arg("c") = 0.01);
  m.def(
      "density_u",
      [](double x, double y, double t, double L, double c) {
        return density_u(x, y, t, make_law(L, c));
      },
      py::arg("x"), py::arg("y"), py::arg("t"), py::arg("L") = 0.01, py::arg("c") = 0.01);

  // ---- estimators ----

  m.def(
      "fit_exponential_rate",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> x, double frac) {
        auto v = to_vector(x);
        return fit_exponential_rate(v, frac);
      },
      py::arg("samples"), py::arg("tail_fraction") = 0.1);
  m.def(
      "hill_tail_exponent",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> x, double frac) {
        auto v = to_vector(x);
        auto h = hill_tail_exponent(v, frac);
        py::dict d;
        d["exponent"] = h.exponent;
        d["tail_count"] = h.tail_count;
        d["threshold"] = h.threshold;
        d["exponent_quarter"] = h.exponent_quarter;
        d["drift"] = h.drift;
        d["power_law_plausible"] = h.power_law_plausible;
        return d;
      },
      py::arg("samples"), py::arg("top_fraction") = 0.01);
  m.def(
      "least_squares",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> x,
         py::array_t<double, py::array::c_style | py::array::forcecast> y) {
        auto xv = to_vector(x);
        auto yv = to_vector(y);
        return fit_dict(least_squares(xv, yv));
      },
      py::arg("x"), py::arg("y"));
  m.def(
      "e_series", [](const TickSeries& s, double tau) { return to_array(e_series(s, tau)); },
      py::arg("series"), py::arg("tau") = 150.0);
  m.def(
      "puck_slope",
      [](const TickSeries& s, int M) {
        auto p = puck_slope(s, M);
        py::dict d = fit_dict(p.fit);
        d["b_est"] = p.b_est;
        return d;
      },
      py::arg("series"), py::arg("M"));
  m.def(
      "potential_curve",
      [](const TickSeries& s, int M, std::size_t window, std::size_t bins, bool symmetric) {
        PotentialOptions opts;
        opts.window = window;
        opts.bins = bins;
        opts.symmetric = symmetric;
        auto f = potential_curve(s, M, opts);
        py::dict d;
        d["centers"] = to_array(f.centers);
        d["mean_dp"] = to_array(f.mean_dp);
        d["potential"] = to_array(f.potential);
        d["counts"] = f.counts;
        d["a_left"] = f.a_left;
        d["a_right"] = f.a_right;
        d["a_joint"] = f.a_joint;
        d["a_joint_stderr"] = f.a_joint_stderr;
        d["noise_floor"] = f.noise_floor();
        d["b_est"] = f.b_est;
        d["a_reg"] = f.a_reg;
        return d;
      },
      py::arg("series"), py::arg("M"), py::arg("window") = 500, py::arg("bins") = 8,
      py::arg("symmetric") = true);
  m.def(
      "diffusion_sigma",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> prices,
         const std::vector<std::size_t>& lags) {
        auto v = to_vector(prices);
        return to_array(diffusion_sigma(v, lags));
      },
      py::arg("prices"), py::arg("lags"));

  // ---- harness ----

  m.def(
      "oracle",
      [](double L, double c, std::optional<double> interval, std::optional<double> abs_dprice,
         std::optional<double> beta, std::optional<double> d, int moments) {
        OracleRequest r;
        r.L = L;
        r.c = c;
        r.interval = interval;
        r.abs_dprice = abs_dprice;
        r.beta = beta;
        r.d = d;
        r.moments = moments;
        return key_values_dict(oracle_values(r));
      },
      py::arg("L") = 0.01, py::arg("c") = 0.01, py::arg("interval") = py::none(),
      py::arg("abs_dprice") = py::none(), py::arg("beta") = py::none(),
      py::arg("d") = py::none(), py::arg("moments") = 4);
  m.def("preset_names", &preset_names);
  m.def(
      "run_experiment",
      [](const std::string& name, std::uint64_t seed, const std::filesystem::path& out,
         std::optional<std::uint64_t> ticks) {
        ExperimentReport report;
        {
          py::gil_scoped_release release;
          report = run_experiment(name, seed, out, ticks);
        }
        py::dict d = key_values_dict(report.to_key_values());
        d["passed"] = report.passed();
        return d;
      },
      py::arg("name"), py::arg("seed"), py::arg("out_dir"), py::arg("ticks") = py::none());
  m.def("default_output_dir", &default_output_dir);
}
