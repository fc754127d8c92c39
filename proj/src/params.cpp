#include "dealer/params.hpp"

#include <cmath>

#include "dealer/errors.hpp"

namespace dealer {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

void SimParams::validate() const {
  require(finite(L) && L > 0.0, "L must be positive");
  // c = 0 is accepted as the degenerate no-noise market.
  require(finite(c) && c >= 0.0, "c must be non-negative");
  require(finite(dp) && dp > 0.0, "dp must be positive");
  require(finite(dt) && dt > 0.0, "dt must be positive");
  if (!allow_custom_dt) {
    const double expected = dp * dp;
    require(std::abs(dt - expected) <= 1e-12 * expected,
            "dt must equal dp*dp (set allow_custom_dt to override)");
  }
  require(finite(trend.d_plus) && finite(trend.d_minus), "d must be finite");
  require(M >= 1, "M must be at least 1");
  require(finite(tau) && tau > 0.0, "tau must be positive");
  require(finite(clamp_lo) && clamp_lo > 0.0, "clamp_lo must be positive");
  require(finite(clamp_hi) && clamp_hi > clamp_lo, "clamp_hi must exceed clamp_lo");
  if (bootstrap_interval) {
    require(finite(*bootstrap_interval) && *bootstrap_interval > 0.0,
            "bootstrap_interval must be positive");
  }
  require(allow_combined || !(self_modulation && trend.active()),
          "self_modulation with a trend term is disabled (allow_combined = false)");
  require(finite(p0) && p0 > 0.0, "p0 must be positive");
  require(max_steps_per_tick >= 1, "max_steps_per_tick must be at least 1");
}

double SimParams::initial_mean_interval() const {
  return bootstrap_interval.value_or(std::sqrt(clamp_lo * clamp_hi));
}

Model parse_model(const std::string& text) {
  if (text == "1") return Model::one;
  if (text == "2") return Model::two;
  if (text == "3") return Model::three;
  if (text == "2+3") return Model::two_three;
  throw ConfigError("model must be one of 1, 2, 3, 2+3 (got '" + text + "')");
}

std::string to_string(Model model) {
  switch (model) {
    case Model::one: return "1";
    case Model::two: return "2";
    case Model::three: return "3";
    case Model::two_three: return "2+3";
  }
  return "?";
}

}  // namespace dealer
