#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pmcr/error.hpp"
#include "pmcr/harness.hpp"
#include "pmcr/scenarios.hpp"

namespace pmcr {

struct ScenarioOptions {
  double gamma_w = 1.0;
  bool two_proxy = false;  // example1 and h3-nonlinear
  bool mmr = false;        // b3-mmr
};

inline const std::vector<std::string>& scenario_ids() {
  static const std::vector<std::string> ids{
      "sec611-h0", "sec611-h1",   "sec612-h0",           "sec612-h1",
      "example1",  "example1-h0", "h3-nonlinear",        "h3-nonlinear-h0",
      "b3-mmr",    "b3-mmr-h0",   "b4-h0",               "h1-random-discrete",
      "h1-random-discrete-h0",    "h2-covariates",       "h2-covariates-h0"};
  return ids;
}

inline std::string scenario_list() {
  std::string out;
  for (const auto& id : scenario_ids()) out += (out.empty() ? "" : ", ") + id;
  return out;
}

/// Linear-Gaussian model with alpha_U = beta_U = gamma_U = 1; gamma_X = 1 under H1.
inline LinearGaussianParams b3_params(Hypothesis h) {
  LinearGaussianParams p;
  p.gamma_X = h == Hypothesis::h1 ? 1.0 : 0.0;
  return p;
}

/// Linear-Gaussian null model with beta_U = 2, gamma_U = 1.
inline LinearGaussianParams b4_params() {
  LinearGaussianParams p;
  p.beta_U = 2.0;
  return p;
}

inline Scenario make_scenario(const std::string& id, const ScenarioOptions& opt = {}) {
  const bool null = id.size() > 3 && id.ends_with("-h0");
  const Hypothesis h = null ? Hypothesis::h0 : Hypothesis::h1;
  const std::string base = null && !id.starts_with("sec6") && id != "b4-h0" ? id.substr(0, id.size() - 3) : id;
  Scenario s;
  s.id = id;

  if (base == "sec611-h0" || base == "sec611-h1") {
    s.description = std::string("random structural causal model, ") + to_string(h);
    s.generate = [h](Index n, std::uint64_t seed) {
      RandomScmConfig cfg;
      cfg.hypothesis = h;
      cfg.seed = seed;
      return gen_random_scm(cfg, n);
    };
  } else if (base == "sec612-h0" || base == "sec612-h1") {
    s.description = std::string("three-level discrete tables, ") + to_string(h);
    s.mode = TestMode::discrete;
    s.generate = [dgp = DiscreteDGP::three_level(h)](Index n, std::uint64_t seed) {
      std::mt19937_64 rng(seed);
      return gen_discrete(dgp, n, rng);
    };
  } else if (base == "example1") {
    s.description = "linear two-proxy model with W -> Y, gamma_W = " + std::to_string(opt.gamma_w) + ", " + to_string(h);
    s.mode = opt.two_proxy ? TestMode::continuous_two_proxy : TestMode::continuous_single;
    s.generate = [h, g = opt.gamma_w](Index n, std::uint64_t seed) {
      std::mt19937_64 rng(seed);
      return gen_two_proxy(TwoProxyKind::linear_example1, h, g, n, rng);
    };
  } else if (base == "h3-nonlinear") {
    s.description = std::string("nonlinear two-proxy model, ") + to_string(h);
    s.mode = opt.two_proxy ? TestMode::continuous_two_proxy : TestMode::continuous_single;
    s.generate = [h](Index n, std::uint64_t seed) {
      std::mt19937_64 rng(seed);
      return gen_two_proxy(TwoProxyKind::nonlinear_h3, h, 0.0, n, rng);
    };
  } else if (base == "b3-mmr") {
    s.description = std::string("linear Gaussian model with a first-moment bridge under H1, ") + to_string(h);
    s.basis = opt.mmr ? Basis::identity : Basis::complex_exp;
    s.generate = [p = b3_params(h)](Index n, std::uint64_t seed) {
      std::mt19937_64 rng(seed);
      return gen_linear_gaussian(p, n, rng);
    };
  } else if (base == "b4-h0") {
    s.description = "linear Gaussian null model, beta_U = 2, gamma_U = 1";
    s.generate = [p = b4_params()](Index n, std::uint64_t seed) {
      std::mt19937_64 rng(seed);
      return gen_linear_gaussian(p, n, rng);
    };
  } else if (base == "h1-random-discrete") {
    s.description = std::string("random discrete tables, ") + to_string(h);
    s.mode = TestMode::discrete;
    s.generate = [h](Index n, std::uint64_t seed) {
      std::mt19937_64 rng(seed);
      const DiscreteDGP dgp = DiscreteDGP::random(h, rng);
      return gen_discrete(dgp, n, rng);
    };
  } else if (base == "h2-covariates") {
    s.description = std::string("observed covariate model, ") + to_string(h);
    s.generate = [h](Index n, std::uint64_t seed) {
      std::mt19937_64 rng(seed);
      return gen_covariates_h2(h, n, rng);
    };
  } else {
    throw Error(ErrorCode::invalid_config, "unknown scenario '" + id + "'; available: " + scenario_list());
  }
  return s;
}

}  // namespace pmcr
