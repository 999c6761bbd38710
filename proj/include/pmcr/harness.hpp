#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pmcr/bootstrap.hpp"
#include "pmcr/bridge_continuous.hpp"
#include "pmcr/bridge_discrete.hpp"
#include "pmcr/dataset.hpp"
#include "pmcr/error.hpp"
#include "pmcr/numerics.hpp"
#include "pmcr/scenarios.hpp"
#include "pmcr/teststats.hpp"

namespace pmcr {

enum class TestMode { continuous_single, continuous_two_proxy, discrete };

inline const char* to_string(TestMode m) {
  switch (m) {
    case TestMode::continuous_single: return "continuous-single";
    case TestMode::continuous_two_proxy: return "continuous-two-proxy";
    case TestMode::discrete: return "discrete";
  }
  return "unknown";
}

struct CrossValidation {
  std::vector<double> grid = default_lambda_grid();
  int folds = 5;
};

struct TestConfig {
  TestMode mode = TestMode::continuous_single;
  Basis basis = Basis::complex_exp;
  int K = 100;
  double t_max = 1.5;
  WeightMeasure measure;
  std::optional<double> lambda;  // fixed value; cross-validated when empty
  double lambda_scale = 0.03;    // applied to the cross-validated value
  CrossValidation cv;
  BootstrapConfig bootstrap;
  bool standardize = true;
  int threads = 1;

  void validate() const {
    if (K < 1) throw Error(ErrorCode::invalid_config, "K must be >= 1");
    if (!(t_max > 0.0) || !std::isfinite(t_max)) throw Error(ErrorCode::invalid_config, "t_max must be positive");
    measure.validate();
    bootstrap.validate();
    if (lambda && !(*lambda > 0.0)) throw Error(ErrorCode::invalid_config, "lambda must be positive");
    if (!(lambda_scale > 0.0) || !std::isfinite(lambda_scale)) {
      throw Error(ErrorCode::invalid_config, "lambda scale must be positive");
    }
  }

  TGrid t_grid() const { return TGrid::uniform(K, t_max); }
};

struct TestReport {
  TestMode mode = TestMode::continuous_single;
  Basis basis = Basis::complex_exp;
  Index n = 0;
  StatisticValue statistic;
  BootstrapResult bootstrap;
  bool reject = false;
  double lambda = 0.0;  // 0 in discrete mode
  std::vector<double> bandwidths_x;
  std::vector<double> bandwidths_w;
  TestConfig config;
  double runtime_ms = 0.0;
};

namespace detail {

inline void require_kind(const Column& c, VariableKind kind, TestMode mode) {
  if (c.kind != kind) {
    throw Error(ErrorCode::invalid_config, "column " + c.name + " must be " +
                                               (kind == VariableKind::continuous ? "continuous" : "categorical") +
                                               " in " + to_string(mode) + " mode");
  }
}

inline Column standardized(const Column& c) { return Column::continuous(c.name, standardize(c.values)); }

inline std::uint64_t cv_seed(std::uint64_t seed) { return hash_combine(seed, 0x6376ULL); }

}  // namespace detail

inline TestReport run_continuous(const Dataset& raw, const TestConfig& cfg) {
  const TestMode mode = cfg.mode;
  for (const Column* c : {&raw.x, &raw.y, &raw.w}) detail::require_kind(*c, VariableKind::continuous, mode);
  for (const auto& c : raw.covariates) detail::require_kind(c, VariableKind::continuous, mode);
  if (mode == TestMode::continuous_two_proxy) {
    if (!raw.z) throw Error(ErrorCode::invalid_config, "two-proxy mode needs a Z column");
    detail::require_kind(*raw.z, VariableKind::continuous, mode);
  }
  if (cfg.basis == Basis::indicator) throw Error(ErrorCode::invalid_config, "indicator basis needs discrete mode");

  Dataset data = raw;
  if (cfg.standardize) {
    data.x = detail::standardized(raw.x);
    data.y = detail::standardized(raw.y);
    data.w = detail::standardized(raw.w);
    if (raw.z) data.z = detail::standardized(*raw.z);
    for (auto& c : data.covariates) c = detail::standardized(c);
  }

  const BridgeProblem problem = BridgeProblem::from(data);
  const ProductKernel kernel_x = median_heuristic_kernel(problem.x);
  const ProductKernel kernel_w = median_heuristic_kernel(problem.w);
  const TGrid grid = cfg.t_grid();

  TestReport report;
  report.bandwidths_x = kernel_x.bandwidths();
  report.bandwidths_w = kernel_w.bandwidths();
  report.lambda = cfg.lambda ? *cfg.lambda
                             : select_lambda(problem, grid, cfg.cv.grid, cfg.cv.folds, kernel_w, kernel_x, cfg.basis,
                                             detail::cv_seed(cfg.bootstrap.seed))
                                       .lambda *
                                   cfg.lambda_scale;

  const BridgeEstimate bridge = fit(problem, grid, report.lambda, kernel_w, kernel_x, cfg.basis);
  const ResidualField field = residuals(bridge, problem);

  RealMatrix cond = problem.x;
  if (mode == TestMode::continuous_two_proxy) {
    cond.conservativeResize(Eigen::NoChange, cond.cols() + 1);
    cond.col(cond.cols() - 1) = data.z->values;
  }
  const SIntegrator rho(cond, cfg.measure);
  report.statistic = delta_continuous(field, rho);
  const ContinuousBootstrap boot(field.values, rho, bridge.smoother.get(), cfg.bootstrap.scheme);
  report.bootstrap = boot.run(report.statistic.delta, cfg.bootstrap, cfg.threads);
  return report;
}

inline TestReport run_discrete(const Dataset& data, const TestConfig& cfg) {
  for (const Column* c : {&data.x, &data.y, &data.w}) detail::require_kind(*c, VariableKind::categorical, cfg.mode);
  if (!data.covariates.empty()) throw Error(ErrorCode::invalid_config, "discrete mode does not take covariates");
  if (cfg.basis == Basis::identity) throw Error(ErrorCode::invalid_config, "identity basis is not defined for discrete mode");
  const TGrid grid = cfg.t_grid();
  const CategoricalTable table = tabulate(data, grid, cfg.basis);
  const DiscreteBridge bridge = ols_bridge(table);
  const RealVector weights = t_grid_weights(table, grid, cfg.measure);
  TestReport report;
  report.statistic = delta_discrete(table, projected_residual(table, bridge), weights);
  const DiscreteBootstrap boot(table, bridge, weights, cfg.bootstrap.scheme);
  report.bootstrap = boot.run(report.statistic.delta, cfg.bootstrap, cfg.threads);
  return report;
}

inline TestReport run_test(const Dataset& data, const TestConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  data.validate();
  TestReport report = cfg.mode == TestMode::discrete ? run_discrete(data, cfg) : run_continuous(data, cfg);
  report.mode = cfg.mode;
  report.basis = cfg.basis;
  report.n = data.size();
  report.config = cfg;
  report.reject = report.statistic.delta >= report.bootstrap.critical_value;
  report.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// Simulation

/// A data-generating scenario: fresh dataset of size n from a seed, plus the test mode it targets.
struct Scenario {
  std::string id;
  std::string description;
  TestMode mode = TestMode::continuous_single;
  Basis basis = Basis::complex_exp;
  std::function<Dataset(Index n, std::uint64_t seed)> generate;
};

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// seed = hash(master, scenario, n, r)
inline std::uint64_t replicate_seed(std::uint64_t master, const std::string& scenario, Index n, std::uint64_t r) {
  return hash_combine(hash_combine(hash_combine(splitmix64(master), fnv1a(scenario)), static_cast<std::uint64_t>(n)), r);
}

struct WilsonInterval {
  double lower = 0.0;
  double upper = 1.0;
};

inline WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054) {
  if (trials == 0) return {};
  const double nt = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / nt;
  const double denom = 1.0 + z * z / nt;
  const double centre = (p + z * z / (2.0 * nt)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nt + z * z / (4.0 * nt * nt)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

struct SimulationCell {
  Index n = 0;
  std::size_t reps = 0;
  double rate = 0.0;
  WilsonInterval wilson;
  double rate_sd = 0.0;     // across meta-repetitions, or the binomial standard error with one
  double outcome_sd = 0.0;  // of the 0/1 replication outcomes
  std::vector<std::uint64_t> seeds;
  std::vector<double> p_values;
  std::vector<bool> rejects;
  std::vector<double> statistics;
};

struct SimulationConfig {
  std::vector<Index> n_values;
  int reps = 100;
  int meta_reps = 1;
  std::uint64_t master_seed = 0;
  int threads = 1;

  void validate() const {
    if (reps < 1) throw Error(ErrorCode::invalid_config, "reps must be >= 1");
    if (meta_reps < 1) throw Error(ErrorCode::invalid_config, "meta repetitions must be >= 1");
    if (n_values.empty()) throw Error(ErrorCode::invalid_config, "empty n list");
    for (Index n : n_values) {
      if (n < 10) throw Error(ErrorCode::invalid_config, "sample sizes must be >= 10");
    }
  }
};

struct SimulationReport {
  std::string scenario;
  std::string description;
  TestConfig test;
  SimulationConfig sim;
  std::vector<SimulationCell> cells;
};

inline SimulationReport run_simulation(const Scenario& scenario, const SimulationConfig& sim, const TestConfig& test) {
  sim.validate();
  test.validate();
  SimulationReport report{scenario.id, scenario.description, test, sim, {}};
  const std::size_t total = static_cast<std::size_t>(sim.reps) * static_cast<std::size_t>(sim.meta_reps);
  const int workers = resolve_threads(sim.threads);
  for (Index n : sim.n_values) {
    SimulationCell cell;
    cell.n = n;
    cell.reps = total;
    cell.seeds.resize(total);
    cell.p_values.resize(total);
    cell.statistics.resize(total);
    std::vector<char> rejected(total, 0);
    parallel_for(total, workers, [&](std::size_t r) {
      const std::uint64_t seed = replicate_seed(sim.master_seed, scenario.id, n, r);
      TestConfig cfg = test;
      cfg.mode = scenario.mode;
      cfg.basis = scenario.basis;
      cfg.threads = 1;
      cfg.bootstrap.seed = hash_combine(seed, 0x626f6f74ULL);
      const Dataset data = scenario.generate(n, seed);
      const TestReport rep = run_test(data, cfg);
      cell.seeds[r] = seed;
      cell.p_values[r] = rep.bootstrap.p_value;
      cell.statistics[r] = rep.statistic.delta;
      rejected[r] = rep.reject ? 1 : 0;
    });
    cell.rejects.assign(rejected.begin(), rejected.end());
    const auto hits = static_cast<std::size_t>(std::count(rejected.begin(), rejected.end(), 1));
    cell.rate = static_cast<double>(hits) / static_cast<double>(total);
    cell.wilson = wilson_interval(hits, total);
    cell.outcome_sd = std::sqrt(cell.rate * (1.0 - cell.rate));
    if (sim.meta_reps > 1) {
      std::vector<double> rates;
      for (int m = 0; m < sim.meta_reps; ++m) {
        const auto begin = rejected.begin() + static_cast<std::ptrdiff_t>(m) * sim.reps;
        rates.push_back(static_cast<double>(std::count(begin, begin + sim.reps, 1)) / sim.reps);
      }
      double ss = 0.0;
      for (double r : rates) ss += (r - cell.rate) * (r - cell.rate);
      cell.rate_sd = std::sqrt(ss / static_cast<double>(rates.size() - 1));
    } else {
      cell.rate_sd = cell.outcome_sd / std::sqrt(static_cast<double>(total));
    }
    report.cells.push_back(std::move(cell));
  }
  return report;
}

}  // namespace pmcr
