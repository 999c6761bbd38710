#pragma once

#include <cstdio>
#include <ostream>
#include <string>

#include "json.hpp"

#include "pmcr/harness.hpp"

namespace pmcr {

inline constexpr const char* kVersion = "1.0.0";

namespace detail {

inline nlohmann::json config_echo(const TestConfig& cfg) {
  nlohmann::json j;
  j["basis"] = to_string(cfg.basis);
  j["K"] = cfg.K;
  j["t_max"] = cfg.t_max;
  j["sigma_s"] = cfg.measure.scale;
  j["B"] = cfg.bootstrap.replications;
  j["alpha"] = cfg.bootstrap.alpha;
  j["bootstrap_scheme"] = to_string(cfg.bootstrap.scheme);
  j["lambda_selection"] = cfg.lambda ? "fixed" : "cv";
  j["cv_folds"] = cfg.cv.folds;
  j["cv_grid_size"] = cfg.cv.grid.size();
  j["lambda_scale"] = cfg.lambda_scale;
  j["standardize"] = cfg.standardize;
  return j;
}

}  // namespace detail

/// Stable field order; runtime_ms is the only non-deterministic field.
inline nlohmann::ordered_json to_json(const TestReport& r, bool include_boot_stats = false) {
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["mode"] = to_string(r.mode);
  j["n"] = r.n;
  j["statistic"] = r.statistic.delta;
  j["critical_value"] = r.bootstrap.critical_value;
  j["p_value"] = r.bootstrap.p_value;
  j["reject"] = r.reject;
  j["lambda"] = r.mode == TestMode::discrete ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r.lambda);
  j["bandwidths"] = {{"x", r.bandwidths_x}, {"w", r.bandwidths_w}};
  j["K"] = r.config.K;
  j["t_max"] = r.config.t_max;
  j["B"] = r.config.bootstrap.replications;
  j["alpha"] = r.config.bootstrap.alpha;
  j["seed"] = r.config.bootstrap.seed;
  j["argmax_t"] = r.statistic.argmax_t;
  j["config"] = detail::config_echo(r.config);
  if (include_boot_stats) j["boot_stats"] = r.bootstrap.boot_stats;
  j["runtime_ms"] = r.runtime_ms;
  return j;
}

inline nlohmann::ordered_json to_json(const SimulationReport& r) {
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["scenario"] = r.scenario;
  j["description"] = r.description;
  j["mode"] = to_string(r.test.mode);
  j["n_values"] = r.sim.n_values;
  j["reps"] = r.sim.reps;
  j["meta_reps"] = r.sim.meta_reps;
  j["master_seed"] = r.sim.master_seed;
  j["B"] = r.test.bootstrap.replications;
  j["alpha"] = r.test.bootstrap.alpha;
  j["K"] = r.test.K;
  j["t_max"] = r.test.t_max;
  j["config"] = detail::config_echo(r.test);
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const auto& c : r.cells) {
    nlohmann::ordered_json cj;
    cj["n"] = c.n;
    cj["reps"] = c.reps;
    cj["rate"] = c.rate;
    cj["wilson_lower"] = c.wilson.lower;
    cj["wilson_upper"] = c.wilson.upper;
    cj["rate_sd"] = c.rate_sd;
    cj["outcome_sd"] = c.outcome_sd;
    nlohmann::ordered_json reps = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < c.p_values.size(); ++i) {
      reps.push_back({{"rep", i}, {"seed", c.seeds[i]}, {"statistic", c.statistics[i]}, {"p_value", c.p_values[i]},
                      {"reject", static_cast<bool>(c.rejects[i])}});
    }
    cj["replications"] = std::move(reps);
    cells.push_back(std::move(cj));
  }
  j["cells"] = std::move(cells);
  return j;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// scenario,n,rep,p_value,reject
inline void write_csv(std::ostream& out, const SimulationReport& r) {
  out << "scenario,n,rep,p_value,reject\n";
  for (const auto& c : r.cells) {
    for (std::size_t i = 0; i < c.p_values.size(); ++i) {
      out << r.scenario << ',' << c.n << ',' << i << ',' << format_double(c.p_values[i]) << ','
          << (c.rejects[i] ? 1 : 0) << '\n';
    }
  }
}

}  // namespace pmcr
