#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "pmcr/bridge_discrete.hpp"
#include "pmcr/dataset.hpp"
#include "pmcr/error.hpp"
#include "pmcr/numerics.hpp"

namespace pmcr {

enum class Hypothesis { h0, h1 };

inline const char* to_string(Hypothesis h) { return h == Hypothesis::h0 ? "H0" : "H1"; }

/// U = e_U, X = alpha_U U + alpha_0 + e_X, W = beta_U U + beta_0 + e_W,
/// Y = gamma_U U + gamma_X X + gamma_W W + gamma_0 + e_Y, all noises standard normal.
struct LinearGaussianParams {
  double alpha_U = 1.0;
  double alpha_0 = 0.0;
  double beta_U = 1.0;
  double beta_0 = 0.0;
  double gamma_U = 1.0;
  double gamma_X = 0.0;
  double gamma_W = 0.0;
  double gamma_0 = 0.0;

  void validate() const {
    for (double v : {alpha_U, alpha_0, beta_U, beta_0, gamma_U, gamma_X, gamma_W, gamma_0}) {
      if (!std::isfinite(v)) throw Error(ErrorCode::invalid_config, "non-finite structural coefficient");
    }
  }
};

inline Dataset gen_linear_gaussian(const LinearGaussianParams& p, Index n, std::mt19937_64& rng) {
  p.validate();
  if (n < 1) throw Error(ErrorCode::invalid_config, "n must be >= 1");
  std::normal_distribution<double> normal;
  RealVector x(n), y(n), w(n);
  for (Index i = 0; i < n; ++i) {
    const double u = normal(rng);
    x(i) = p.alpha_U * u + p.alpha_0 + normal(rng);
    w(i) = p.beta_U * u + p.beta_0 + normal(rng);
    y(i) = p.gamma_U * u + p.gamma_X * x(i) + p.gamma_W * w(i) + p.gamma_0 + normal(rng);
  }
  return Dataset{Column::continuous("X", x), Column::continuous("Y", y), Column::continuous("W", w), {}, {}};
}

/// Affine conditional law given X: mean = slope * x + intercept, variance.
struct ConditionalGaussian {
  double slope = 0.0;
  double intercept = 0.0;
  double variance = 0.0;
};

struct ConditionalLaws {
  ConditionalGaussian w;
  ConditionalGaussian y;
};

inline ConditionalLaws conditional_laws(const LinearGaussianParams& p) {
  p.validate();
  const double s = p.alpha_U * p.alpha_U + 1.0;
  const ConditionalGaussian u{p.alpha_U / s, -p.alpha_U * p.alpha_0 / s, 1.0 / s};
  ConditionalLaws out;
  out.w = {p.beta_U * u.slope, p.beta_0 + p.beta_U * u.intercept, p.beta_U * p.beta_U * u.variance + 1.0};
  const double load = p.gamma_U + p.gamma_W * p.beta_U;
  out.y = {load * u.slope + p.gamma_X, load * u.intercept + p.gamma_W * p.beta_0 + p.gamma_0,
           load * load * u.variance + p.gamma_W * p.gamma_W + 1.0};
  return out;
}

enum class Solvability { solvable, not_solvable };

struct SolvabilityResult {
  Solvability status = Solvability::not_solvable;
  double margin = 0.0;
};

/// Sign of C + B gamma_X + A gamma_X^2 + D gamma_X gamma_W - 2 (gamma_U / beta_U) gamma_W,
/// which equals Var(Y|X) - (dE[Y|X]/dx / dE[W|X]/dx)^2 Var(W|X).
inline SolvabilityResult solvability_linear_gaussian(const LinearGaussianParams& p) {
  p.validate();
  const double a = p.alpha_U;
  const double b = p.beta_U;
  const double g = p.gamma_U;
  if (a * b == 0.0) throw Error(ErrorCode::undefined_solution, "alpha_U * beta_U = 0 leaves the conditional slope undefined");
  const double c0 = 1.0 - g * g / (b * b);
  const double c1 = -(2.0 * g / a + 2.0 * g / (a * b * b) + 2.0 * a * g / (b * b));
  const double c2 = -(1.0 + 1.0 / (a * a) + 2.0 / (b * b) + 1.0 / (a * a * b * b) + a * a / (b * b));
  const double cd = -2.0 * (1.0 / (a * b) + a / b + b / a);
  const double gx = p.gamma_X;
  const double gw = p.gamma_W;
  const double margin = c0 + c1 * gx + c2 * gx * gx + cd * gx * gw - 2.0 * (g / b) * gw;
  return {margin > 0.0 ? Solvability::solvable : Solvability::not_solvable, margin};
}

/// Linear two-proxy model in raw units: X = 2U + e, W = -2U + e, Y = X/sqrt5 + U + gamma_W W/sqrt5 + e.
inline LinearGaussianParams example1_params(double gamma_w) {
  const double root5 = std::sqrt(5.0);
  LinearGaussianParams p;
  p.alpha_U = 2.0;
  p.beta_U = -2.0;
  p.gamma_U = 1.0;
  p.gamma_X = 1.0 / root5;
  p.gamma_W = gamma_w / root5;
  return p;
}

/// H(w, t) = exp(i t (intercept + slope w) - t^2 variance / 2), the characteristic-function
/// transform of the Gaussian bridge h(w, y) = N(y; intercept + slope w, variance).
struct AnalyticBridge {
  double slope = 0.0;
  double intercept = 0.0;
  double variance = 0.0;

  std::complex<double> operator()(double w, double t) const {
    return std::exp(std::complex<double>(-0.5 * t * t * variance, t * (intercept + slope * w)));
  }

  double density(double w, double y) const {
    const double z = (y - intercept - slope * w);
    return std::exp(-0.5 * z * z / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
  }
};

inline AnalyticBridge analytic_bridge(const LinearGaussianParams& p) {
  if (p.alpha_U * p.beta_U == 0.0) throw Error(ErrorCode::undefined_solution, "alpha_U * beta_U = 0");
  const auto laws = conditional_laws(p);
  AnalyticBridge h;
  h.slope = laws.y.slope / laws.w.slope;
  h.intercept = laws.y.intercept - h.slope * laws.w.intercept;
  h.variance = laws.y.variance - h.slope * h.slope * laws.w.variance;
  if (!(h.variance > 0.0)) throw Error(ErrorCode::no_solution, "bridge variance is not positive");
  return h;
}

struct FirstMomentSolution {
  double b_w = 0.0;
  double b_0 = 0.0;
};

/// h(W) = b_w W + b_0 with E[Y | X] = E[h(W) | X] when gamma_W = 0.
inline FirstMomentSolution mmr_first_moment_solution(const LinearGaussianParams& p) {
  p.validate();
  const double au = p.alpha_U;
  const double bu = p.beta_U;
  if (au * bu == 0.0) throw Error(ErrorCode::undefined_solution, "alpha_U * beta_U = 0");
  if (p.gamma_W != 0.0) throw Error(ErrorCode::invalid_config, "first-moment solution assumes gamma_W = 0");
  FirstMomentSolution s;
  s.b_w = ((au * au + 1.0) * p.gamma_X + p.gamma_U * au) / (bu * au);
  s.b_0 = p.gamma_0 + p.gamma_X * p.alpha_0 - s.b_w * p.beta_0;
  return s;
}

// Random structural causal model

enum class FunctionKind { linear, tanh, sin, sqrt };
enum class NoiseKind { gaussian, uniform, exponential, gamma };

inline const char* to_string(FunctionKind f) {
  switch (f) {
    case FunctionKind::linear: return "linear";
    case FunctionKind::tanh: return "tanh";
    case FunctionKind::sin: return "sin";
    case FunctionKind::sqrt: return "sqrt";
  }
  return "unknown";
}

inline const char* to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::uniform: return "uniform";
    case NoiseKind::exponential: return "exponential";
    case NoiseKind::gamma: return "gamma";
  }
  return "unknown";
}

inline double apply(FunctionKind f, double v) {
  switch (f) {
    case FunctionKind::linear: return v;
    case FunctionKind::tanh: return std::tanh(v);
    case FunctionKind::sin: return std::sin(v);
    case FunctionKind::sqrt: return std::copysign(std::sqrt(std::abs(v)), v);
  }
  return v;
}

/// Centered draws: N(0,1), U[-sqrt3, sqrt3], Exp(1) - 1, Gamma(2, 1) - 2.
inline double draw_noise(NoiseKind k, std::mt19937_64& rng) {
  switch (k) {
    case NoiseKind::gaussian: return std::normal_distribution<double>()(rng);
    case NoiseKind::uniform: return std::uniform_real_distribution<double>(-std::sqrt(3.0), std::sqrt(3.0))(rng);
    case NoiseKind::exponential: return std::exponential_distribution<double>(1.0)(rng) - 1.0;
    case NoiseKind::gamma: return std::gamma_distribution<double>(2.0, 1.0)(rng) - 2.0;
  }
  return 0.0;
}

struct RandomScmConfig {
  Hypothesis hypothesis = Hypothesis::h0;
  std::vector<FunctionKind> functions{FunctionKind::linear, FunctionKind::tanh, FunctionKind::sin, FunctionKind::sqrt};
  std::vector<NoiseKind> noises{NoiseKind::gaussian, NoiseKind::uniform, NoiseKind::exponential, NoiseKind::gamma};
  std::uint64_t seed = 0;
  double coef_min = 0.5;
  double coef_max = 1.5;

  void validate() const {
    if (functions.empty() || noises.empty()) throw Error(ErrorCode::invalid_config, "function and noise pools must be nonempty");
    if (!(coef_min > 0.0 && coef_max >= coef_min)) throw Error(ErrorCode::invalid_config, "invalid coefficient range");
  }
};

/// One node V = f(sum_p a_p PA_p) + e.
struct ScmNode {
  FunctionKind f = FunctionKind::linear;
  NoiseKind noise = NoiseKind::gaussian;
  std::vector<double> coefs;
};

struct RandomScm {
  ScmNode u, x, w, y;  // y.coefs = {on U, on X (H1 only)}
};

inline RandomScm draw_scm(const RandomScmConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  auto pick_f = [&] {
    return cfg.functions[std::uniform_int_distribution<std::size_t>(0, cfg.functions.size() - 1)(rng)];
  };
  auto pick_noise = [&] {
    return cfg.noises[std::uniform_int_distribution<std::size_t>(0, cfg.noises.size() - 1)(rng)];
  };
  auto coef = [&] {
    const double mag = std::uniform_real_distribution<double>(cfg.coef_min, cfg.coef_max)(rng);
    return std::bernoulli_distribution(0.5)(rng) ? mag : -mag;
  };
  RandomScm m;
  m.u = {FunctionKind::linear, pick_noise(), {}};
  m.x = {pick_f(), pick_noise(), {coef()}};
  m.w = {pick_f(), pick_noise(), {coef()}};
  m.y = {pick_f(), pick_noise(), {coef()}};
  if (cfg.hypothesis == Hypothesis::h1) m.y.coefs.push_back(coef());
  return m;
}

/// `latent`, when given, receives the confounder draws.
inline Dataset sample_scm(const RandomScm& m, Index n, std::mt19937_64& rng, RealVector* latent = nullptr) {
  if (n < 1) throw Error(ErrorCode::invalid_config, "n must be >= 1");
  RealVector x(n), y(n), w(n);
  if (latent) latent->resize(n);
  for (Index i = 0; i < n; ++i) {
    const double u = draw_noise(m.u.noise, rng);
    if (latent) (*latent)(i) = u;
    x(i) = apply(m.x.f, m.x.coefs[0] * u) + draw_noise(m.x.noise, rng);
    w(i) = apply(m.w.f, m.w.coefs[0] * u) + draw_noise(m.w.noise, rng);
    double arg = m.y.coefs[0] * u;
    if (m.y.coefs.size() > 1) arg += m.y.coefs[1] * x(i);
    y(i) = apply(m.y.f, arg) + draw_noise(m.y.noise, rng);
  }
  return Dataset{Column::continuous("X", x), Column::continuous("Y", y), Column::continuous("W", w), {}, {}};
}

/// U -> (X, W, Y), plus X -> Y under H1; structure drawn from cfg.seed, samples from the same stream.
inline Dataset gen_random_scm(const RandomScmConfig& cfg, Index n, RealVector* latent = nullptr) {
  std::mt19937_64 rng(cfg.seed);
  const RandomScm m = draw_scm(cfg, rng);
  return sample_scm(m, n, rng, latent);
}

// Discrete tables

struct DiscreteDGP {
  RealVector p_x;                         // |X|
  RealMatrix p_u_given_x;                 // |U| x |X|, column x = P(U | x)
  RealMatrix p_w_given_u;                 // |W| x |U|
  std::vector<RealMatrix> p_y_given_ux;   // per x: |Y| x |U|

  Index x_count() const { return p_x.size(); }

  void validate() const {
    auto stochastic = [](const RealMatrix& m, const char* what) {
      if (m.size() == 0 || (m.array() < 0.0).any() || !m.allFinite()) {
        throw Error(ErrorCode::invalid_config, std::string("invalid stochastic table ") + what);
      }
      for (Index j = 0; j < m.cols(); ++j) {
        if (std::abs(m.col(j).sum() - 1.0) > 1e-12) {
          throw Error(ErrorCode::invalid_config, std::string("columns of ") + what + " must sum to 1");
        }
      }
    };
    stochastic(RealMatrix(p_x), "P(X)");
    stochastic(p_u_given_x, "P(U|X)");
    stochastic(p_w_given_u, "P(W|U)");
    if (p_u_given_x.cols() != p_x.size() || p_w_given_u.cols() != p_u_given_x.rows() ||
        static_cast<Index>(p_y_given_ux.size()) != p_x.size()) {
      throw Error(ErrorCode::invalid_config, "discrete table dimensions do not match");
    }
    for (const auto& m : p_y_given_ux) {
      stochastic(m, "P(Y|U,X)");
      if (m.cols() != p_u_given_x.rows() || m.rows() != p_y_given_ux.front().rows()) {
        throw Error(ErrorCode::invalid_config, "P(Y|U,X) dimensions do not match");
      }
    }
  }

  /// P(W | x) as an |X| x |W| matrix of rows.
  RealMatrix w_given_x() const { return (p_w_given_u * p_u_given_x).transpose(); }

  /// P(Y = level | x) for each x.
  RealVector y_given_x(Index level) const {
    RealVector out(x_count());
    for (Index x = 0; x < x_count(); ++x) {
      out(x) = p_y_given_ux[static_cast<std::size_t>(x)].row(level).dot(p_u_given_x.col(x));
    }
    return out;
  }

  static DiscreteDGP three_level(Hypothesis h) {
    DiscreteDGP d;
    d.p_x = RealVector{{0.3, 0.3, 0.4}};
    d.p_u_given_x = RealMatrix{{0.3, 0.6, 0.5}, {0.7, 0.4, 0.5}};
    d.p_w_given_u = RealMatrix{{0.8, 0.3}, {0.2, 0.7}};
    if (h == Hypothesis::h0) {
      const RealMatrix y{{0.5, 0.4}, {0.3, 0.5}, {0.2, 0.1}};
      d.p_y_given_ux = {y, y, y};
    } else {
      d.p_y_given_ux = {RealMatrix{{0.5, 0.4}, {0.3, 0.2}, {0.2, 0.4}},
                        RealMatrix{{0.4, 0.6}, {0.2, 0.3}, {0.4, 0.1}},
                        RealMatrix{{0.3, 0.2}, {0.4, 0.5}, {0.3, 0.3}}};
    }
    return d;
  }

  /// Random tables: U -> X, W, Y (and X -> Y under H1) with Dirichlet(1) conditionals,
  /// converted to the X-first form by Bayes' rule.
  static DiscreteDGP random(Hypothesis h, std::mt19937_64& rng, Index nw = 5, Index nu = 5, Index nx = 7,
                            Index ny = 4) {
    std::exponential_distribution<double> e(1.0);
    auto simplex_cols = [&](Index rows, Index cols) {
      RealMatrix m(rows, cols);
      for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) m(i, j) = e(rng);
        m.col(j) /= m.col(j).sum();
      }
      return m;
    };
    const RealVector p_u = simplex_cols(nu, 1).col(0);
    const RealMatrix x_given_u = simplex_cols(nx, nu);
    DiscreteDGP d;
    d.p_w_given_u = simplex_cols(nw, nu);
    d.p_x = x_given_u * p_u;
    d.p_u_given_x = RealMatrix(nu, nx);
    for (Index x = 0; x < nx; ++x) {
      for (Index u = 0; u < nu; ++u) d.p_u_given_x(u, x) = x_given_u(x, u) * p_u(u) / d.p_x(x);
      d.p_u_given_x.col(x) /= d.p_u_given_x.col(x).sum();
    }
    d.p_x /= d.p_x.sum();
    const RealMatrix shared = simplex_cols(ny, nu);
    for (Index x = 0; x < nx; ++x) d.p_y_given_ux.push_back(h == Hypothesis::h0 ? shared : simplex_cols(ny, nu));
    return d;
  }
};

inline int draw_categorical(const RealVector& p, std::mt19937_64& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (Index k = 0; k < p.size(); ++k) {
    acc += p(k);
    if (u < acc) return static_cast<int>(k);
  }
  return static_cast<int>(p.size() - 1);
}

inline std::vector<std::string> level_labels(const std::string& prefix, Index count) {
  std::vector<std::string> out;
  for (Index i = 0; i < count; ++i) out.push_back(prefix + std::to_string(i + 1));
  return out;
}

inline Dataset gen_discrete(const DiscreteDGP& dgp, Index n, std::mt19937_64& rng) {
  dgp.validate();
  if (n < 1) throw Error(ErrorCode::invalid_config, "n must be >= 1");
  std::vector<int> xs, ys, ws;
  for (Index i = 0; i < n; ++i) {
    const int x = draw_categorical(dgp.p_x, rng);
    const int u = draw_categorical(dgp.p_u_given_x.col(x), rng);
    ws.push_back(draw_categorical(dgp.p_w_given_u.col(u), rng));
    ys.push_back(draw_categorical(dgp.p_y_given_ux[static_cast<std::size_t>(x)].col(u), rng));
    xs.push_back(x);
  }
  const Index ny = dgp.p_y_given_ux.front().rows();
  return Dataset{Column::categorical("X", xs, level_labels("x", dgp.x_count())),
                 Column::categorical("Y", ys, level_labels("y", ny)),
                 Column::categorical("W", ws, level_labels("w", dgp.p_w_given_u.rows())), {}, {}};
}

/// Exact-probability table for the given basis columns (indicator: one column per Y level).
inline CategoricalTable population_table(const DiscreteDGP& dgp, Basis basis, const std::vector<double>& t_points = {}) {
  dgp.validate();
  const Index ny = dgp.p_y_given_ux.front().rows();
  ComplexMatrix q;
  if (basis == Basis::indicator) {
    q = ComplexMatrix(dgp.x_count(), ny);
    for (Index y = 0; y < ny; ++y) q.re.col(y) = dgp.y_given_x(y);
  } else {
    const auto cols = static_cast<Index>(t_points.size());
    q = ComplexMatrix(dgp.x_count(), cols);
    for (Index y = 0; y < ny; ++y) {
      const RealVector p = dgp.y_given_x(y);
      for (Index k = 0; k < cols; ++k) {
        const auto v = phi(static_cast<double>(y), t_points[static_cast<std::size_t>(k)], basis);
        q.re.col(k) += p * v.real();
        q.im.col(k) += p * v.imag();
      }
    }
  }
  return CategoricalTable::population(dgp.p_x, dgp.w_given_x(), q);
}

// Two-proxy and covariate scenarios

enum class TwoProxyKind { linear_example1, nonlinear_h3 };

/// linear_example1: X = 2U + e, W = -2U + e, Z = 2U + e, Y = [X'] + U + gamma_W W' + e with
/// X' = X / sqrt5, W' = W / sqrt5. nonlinear_h3: W = -2 sin U + e, Z = 2 sin U + e, X = 2 sin U + e,
/// Y = [X] + sin U + 2 W^2 + e. The bracketed term is present under H1 only.
inline Dataset gen_two_proxy(TwoProxyKind kind, Hypothesis h, double gamma_w, Index n, std::mt19937_64& rng,
                             RealVector* latent = nullptr) {
  if (n < 1) throw Error(ErrorCode::invalid_config, "n must be >= 1");
  if (!std::isfinite(gamma_w)) throw Error(ErrorCode::invalid_config, "non-finite gamma_W");
  std::normal_distribution<double> normal;
  const double root5 = std::sqrt(5.0);
  const double direct = h == Hypothesis::h1 ? 1.0 : 0.0;
  RealVector x(n), y(n), w(n), z(n);
  if (latent) latent->resize(n);
  for (Index i = 0; i < n; ++i) {
    const double u = normal(rng);
    if (latent) (*latent)(i) = u;
    if (kind == TwoProxyKind::linear_example1) {
      x(i) = 2.0 * u + normal(rng);
      w(i) = -2.0 * u + normal(rng);
      z(i) = 2.0 * u + normal(rng);
      y(i) = direct * x(i) / root5 + u + gamma_w * w(i) / root5 + normal(rng);
    } else {
      const double s = std::sin(u);
      w(i) = -2.0 * s + normal(rng);
      z(i) = 2.0 * s + normal(rng);
      x(i) = 2.0 * s + normal(rng);
      y(i) = direct * x(i) + s + 2.0 * w(i) * w(i) + normal(rng);
    }
  }
  return Dataset{Column::continuous("X", x), Column::continuous("Y", y), Column::continuous("W", w),
                 Column::continuous("Z", z), {}};
}

/// X = 0.5 + U + 0.3U^2 + 0.5V + e1, Y = -1 + U + 0.4U^2 + V + delta X + e2, W = 1 + U + 0.5V + e3,
/// delta = 1 under H1; V is returned as an observed covariate.
inline Dataset gen_covariates_h2(Hypothesis h, Index n, std::mt19937_64& rng) {
  if (n < 1) throw Error(ErrorCode::invalid_config, "n must be >= 1");
  std::normal_distribution<double> normal;
  const double delta = h == Hypothesis::h1 ? 1.0 : 0.0;
  RealVector x(n), y(n), w(n), v(n);
  for (Index i = 0; i < n; ++i) {
    const double u = normal(rng);
    v(i) = normal(rng);
    x(i) = 0.5 + u + 0.3 * u * u + 0.5 * v(i) + normal(rng);
    y(i) = -1.0 + u + 0.4 * u * u + v(i) + delta * x(i) + normal(rng);
    w(i) = 1.0 + u + 0.5 * v(i) + normal(rng);
  }
  return Dataset{Column::continuous("X", x), Column::continuous("Y", y), Column::continuous("W", w), {},
                 {Column::continuous("V", v)}};
}

}  // namespace pmcr
