#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "pmcr/catalog.hpp"
#include "pmcr/scenarios.hpp"

using namespace pmcr;

namespace {

double correlation(const RealVector& a, const RealVector& b) {
  const RealVector ca = a.array() - a.mean();
  const RealVector cb = b.array() - b.mean();
  return ca.dot(cb) / std::sqrt(ca.squaredNorm() * cb.squaredNorm());
}

/// Residual of `v` after least-squares regression on the columns of `z` and an intercept.
RealVector residualize(const RealVector& v, const RealMatrix& z) {
  RealMatrix design(v.size(), z.cols() + 1);
  design << z, RealVector::Ones(v.size());
  return v - design * design.colPivHouseholderQr().solve(v);
}

double variance(const RealVector& v) { return (v.array() - v.mean()).square().mean(); }

/// Joint covariance of (U, X, W, Y) from the structural equations, via (I - B)^{-1}.
RealMatrix structural_covariance(const LinearGaussianParams& p) {
  RealMatrix b = RealMatrix::Zero(4, 4);  // row = child, col = parent
  b(1, 0) = p.alpha_U;
  b(2, 0) = p.beta_U;
  b(3, 0) = p.gamma_U;
  b(3, 1) = p.gamma_X;
  b(3, 2) = p.gamma_W;
  const RealMatrix a = (RealMatrix::Identity(4, 4) - b).inverse();
  return a * a.transpose();
}

/// Var(Y|X) - (Cov(Y,X) / Cov(W,X))^2 Var(W|X) by Schur complements.
double exact_margin(const LinearGaussianParams& p) {
  const RealMatrix s = structural_covariance(p);
  const double vx = s(1, 1);
  const double var_y = s(3, 3) - s(3, 1) * s(3, 1) / vx;
  const double var_w = s(2, 2) - s(2, 1) * s(2, 1) / vx;
  const double ratio = s(3, 1) / s(2, 1);
  return var_y - ratio * ratio * var_w;
}

}  // namespace

TEST(RandomScm, Deterministic) {
  RandomScmConfig cfg;
  cfg.seed = 5;
  cfg.hypothesis = Hypothesis::h1;
  const Dataset a = gen_random_scm(cfg, 200);
  const Dataset b = gen_random_scm(cfg, 200);
  EXPECT_EQ(a.x.values, b.x.values);
  EXPECT_EQ(a.y.values, b.y.values);
  EXPECT_EQ(a.w.values, b.w.values);
  cfg.seed = 6;
  EXPECT_NE(gen_random_scm(cfg, 200).y.values, a.y.values);
}

TEST(RandomScm, PoolCollapseGivesLinearGaussian) {
  RandomScmConfig cfg;
  cfg.functions = {FunctionKind::linear};
  cfg.noises = {NoiseKind::gaussian};
  cfg.coef_min = cfg.coef_max = 1.0;
  cfg.seed = 7;
  std::mt19937_64 rng(cfg.seed);
  const RandomScm m = draw_scm(cfg, rng);
  for (const ScmNode* node : {&m.x, &m.w, &m.y}) {
    EXPECT_EQ(node->f, FunctionKind::linear);
    EXPECT_EQ(node->noise, NoiseKind::gaussian);
    EXPECT_EQ(std::abs(node->coefs[0]), 1.0);
  }
  EXPECT_EQ(m.y.coefs.size(), 1u);
  RealVector u;
  const Dataset d = sample_scm(m, 100000, rng, &u);
  // Unit loadings and unit noise: every observed variance is 2 and every pairwise |correlation| 1/2.
  for (const RealVector* v : {&d.x.values, &d.w.values, &d.y.values}) EXPECT_NEAR(variance(*v), 2.0, 0.05);
  EXPECT_NEAR(std::abs(correlation(d.x.values, d.w.values)), 0.5, 0.01);
  EXPECT_NEAR(std::abs(correlation(d.x.values, d.y.values)), 0.5, 0.01);
  EXPECT_LT((d.x.values - m.x.coefs[0] * u).cwiseAbs().maxCoeff(), 10.0);
}

TEST(RandomScm, NullExcludesDirectEffect) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RandomScmConfig cfg;
    cfg.seed = seed;
    std::mt19937_64 rng(cfg.seed);
    const RandomScm m = draw_scm(cfg, rng);
    RealVector u;
    const Dataset d = sample_scm(m, 100000, rng, &u);
    RealVector e_x(d.size());
    for (Index i = 0; i < d.size(); ++i) e_x(i) = d.x.values(i) - apply(m.x.f, m.x.coefs[0] * u(i));
    EXPECT_LT(std::abs(correlation(e_x, d.y.values)), 0.02) << "seed " << seed;
  }
}

TEST(RandomScm, SignedSqrtAndCenteredNoise) {
  EXPECT_EQ(apply(FunctionKind::sqrt, -4.0), -2.0);
  EXPECT_EQ(apply(FunctionKind::sqrt, 9.0), 3.0);
  std::mt19937_64 rng(8);
  const double var_expected[] = {1.0, 1.0, 1.0, 2.0};
  int k = 0;
  for (NoiseKind kind : {NoiseKind::gaussian, NoiseKind::uniform, NoiseKind::exponential, NoiseKind::gamma}) {
    RealVector v(200000);
    for (Index i = 0; i < v.size(); ++i) v(i) = draw_noise(kind, rng);
    EXPECT_NEAR(v.mean(), 0.0, 0.015) << to_string(kind);
    EXPECT_NEAR(variance(v), var_expected[k++], 0.05) << to_string(kind);
  }
  RandomScmConfig bad;
  bad.functions.clear();
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Discrete, BuiltInTables) {
  const DiscreteDGP h0 = DiscreteDGP::three_level(Hypothesis::h0);
  EXPECT_EQ(h0.p_w_given_u, (RealMatrix{{0.8, 0.3}, {0.2, 0.7}}));
  const DiscreteDGP h1 = DiscreteDGP::three_level(Hypothesis::h1);
  EXPECT_EQ(h1.p_y_given_ux[1].row(0), (RealMatrix{{0.4, 0.6}}));
  EXPECT_NO_THROW(h0.validate());
  EXPECT_NO_THROW(h1.validate());
  for (Index x = 1; x < 3; ++x) EXPECT_EQ(h0.p_y_given_ux[static_cast<std::size_t>(x)], h0.p_y_given_ux[0]);

  DiscreteDGP bad = h0;
  bad.p_w_given_u(0, 0) = 0.9;
  try {
    bad.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_config);
  }
}

TEST(Discrete, MarginalFrequencies) {
  std::mt19937_64 rng(9);
  const Dataset d = gen_discrete(DiscreteDGP::three_level(Hypothesis::h0), 100000, rng);
  const RealVector p{{0.3, 0.3, 0.4}};
  for (Index x = 0; x < 3; ++x) {
    const double freq = static_cast<double>((d.x.values.array() == static_cast<double>(x)).count()) / 1e5;
    EXPECT_NEAR(freq, p(x), 0.01);
  }
  std::mt19937_64 a(10), b(10);
  EXPECT_EQ(gen_discrete(DiscreteDGP::three_level(Hypothesis::h1), 50, a).y.values,
            gen_discrete(DiscreteDGP::three_level(Hypothesis::h1), 50, b).y.values);
}

TEST(Discrete, RandomTablesAreValid) {
  std::mt19937_64 rng(11);
  for (int r = 0; r < 20; ++r) {
    const DiscreteDGP d = DiscreteDGP::random(r % 2 ? Hypothesis::h1 : Hypothesis::h0, rng);
    EXPECT_NO_THROW(d.validate());
    if (r % 2 == 0) {
      EXPECT_EQ(d.p_y_given_ux[0], d.p_y_given_ux[3]);
    }
  }
}

TEST(TwoProxy, Example1Moments) {
  std::mt19937_64 rng(12);
  RealVector u;
  const Dataset d = gen_two_proxy(TwoProxyKind::linear_example1, Hypothesis::h1, 1.0, 100000, rng, &u);
  ASSERT_TRUE(d.z.has_value());
  // Var(X) = 2^2 + 1.
  EXPECT_NEAR(variance(d.x.values), 5.0, 3.0 * 5.0 * std::sqrt(2.0 / 1e5));
  EXPECT_NEAR(variance(d.w.values), 5.0, 3.0 * 5.0 * std::sqrt(2.0 / 1e5));
}

TEST(TwoProxy, Example1NullIndependence) {
  std::mt19937_64 rng(13);
  RealVector u;
  const Dataset d = gen_two_proxy(TwoProxyKind::linear_example1, Hypothesis::h0, 0.0, 100000, rng, &u);
  const RealMatrix given_u(u);
  EXPECT_LT(std::abs(correlation(residualize(d.y.values, given_u), residualize(d.w.values, given_u))), 0.02);
  EXPECT_LT(std::abs(correlation(residualize(d.y.values, given_u), residualize(d.x.values, given_u))), 0.02);
  EXPECT_LT(std::abs(correlation(residualize(d.z->values, given_u), residualize(d.w.values, given_u))), 0.02);
}

TEST(TwoProxy, NonlinearOutcomeMean) {
  // E[Y] = 2 E[W^2] = 2 (4 E[sin^2 U] + 1) under H1, E[sin^2 U] by Gauss-Hermite.
  const oracle::Quadrature q = oracle::gauss_hermite(64);
  double sin2 = 0.0;
  for (Index k = 0; k < 64; ++k) {
    const double s = std::sin(std::sqrt(2.0) * q.nodes(k));
    sin2 += q.weights(k) * s * s / std::sqrt(std::numbers::pi);
  }
  EXPECT_NEAR(sin2, (1.0 - std::exp(-2.0)) / 2.0, 1e-12);
  std::mt19937_64 rng(14);
  const Dataset d = gen_two_proxy(TwoProxyKind::nonlinear_h3, Hypothesis::h1, 1.0, 100000, rng);
  const double expected = 2.0 * (4.0 * sin2 + 1.0);
  const double se = std::sqrt(variance(d.y.values) / 1e5);
  EXPECT_NEAR(d.y.values.mean(), expected, 3.0 * se);
}

TEST(AnalyticBridge, B4Parameters) {
  const AnalyticBridge h = analytic_bridge(b4_params());
  EXPECT_NEAR(h.slope, 0.5, 1e-15);
  EXPECT_NEAR(h.variance, 0.75, 1e-15);
  EXPECT_NEAR(h.intercept, 0.0, 1e-15);
  for (double w : {-2.0, 0.0, 3.3}) EXPECT_EQ(h(w, 0.0), std::complex<double>(1.0, 0.0));
}

TEST(AnalyticBridge, FourierTransformOfDensity) {
  const AnalyticBridge h = analytic_bridge(b4_params());
  const double w = 0.7, t = 1.3;
  // Composite Simpson over 200 intervals on mean +- 12 sd.
  const double mean = h.intercept + h.slope * w;
  const double half = 12.0 * std::sqrt(h.variance);
  const int m = 200;
  const double step = 2.0 * half / m;
  std::complex<double> acc = 0.0;
  for (int k = 0; k <= m; ++k) {
    const double y = mean - half + k * step;
    const double coef = (k == 0 || k == m) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    acc += coef * std::exp(std::complex<double>(0.0, t * y)) * h.density(w, y);
  }
  acc *= step / 3.0;
  EXPECT_LT(std::abs(acc - h(w, t)), 1e-8);
}

TEST(AnalyticBridge, SolvesTheIntegralEquation) {
  // by hand: U | x ~ N(x/2, 1/2), so W | x ~ N(x, 3) and Y | x ~ N(x/2, 3/2).
  const AnalyticBridge h = analytic_bridge(b4_params());
  const oracle::Quadrature q = oracle::gauss_hermite(64);
  for (double x : {-2.0, -0.5, 0.0, 1.0, 2.5}) {
    for (double t : {0.3, 1.0, 2.0}) {
      std::complex<double> lhs = 0.0;
      for (Index k = 0; k < 64; ++k) {
        lhs += q.weights(k) * h(x + std::sqrt(6.0) * q.nodes(k), t) / std::sqrt(std::numbers::pi);
      }
      const auto rhs = std::exp(std::complex<double>(-0.75 * t * t, 0.5 * t * x));
      EXPECT_LT(std::abs(lhs - rhs), 1e-10) << x << " " << t;
    }
  }
}

TEST(AnalyticBridge, Errors) {
  LinearGaussianParams p = b4_params();
  p.beta_U = 0.5;  // 1 - (gamma_U / beta_U)^2 < 0
  try {
    analytic_bridge(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::no_solution);
  }
  p.beta_U = 0.0;
  EXPECT_THROW(analytic_bridge(p), Error);
}

TEST(FirstMoment, StatedValues) {
  const FirstMomentSolution s = mmr_first_moment_solution(b3_params(Hypothesis::h1));
  EXPECT_DOUBLE_EQ(s.b_w, 3.0);
  EXPECT_DOUBLE_EQ(s.b_0, 0.0);
  LinearGaussianParams p;
  p.gamma_U = 0.0;
  EXPECT_DOUBLE_EQ(mmr_first_moment_solution(p).b_w, 0.0);
  p.alpha_U = 0.0;
  try {
    mmr_first_moment_solution(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::undefined_solution);
  }
}

TEST(FirstMoment, BinnedConditionalMeans) {
  const LinearGaussianParams p = b3_params(Hypothesis::h1);
  const FirstMomentSolution s = mmr_first_moment_solution(p);
  std::mt19937_64 rng(15);
  const Dataset d = gen_linear_gaussian(p, 100000, rng);
  std::vector<std::pair<double, double>> rows;
  for (Index i = 0; i < d.size(); ++i) {
    rows.emplace_back(d.x.values(i), d.y.values(i) - s.b_w * d.w.values(i) - s.b_0);
  }
  std::sort(rows.begin(), rows.end());
  const std::size_t bins = 4, per = rows.size() / bins;
  double worst = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    double sum = 0.0;
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) sum += rows[i].second;
    worst = std::max(worst, std::abs(sum / static_cast<double>(per)));
  }
  EXPECT_LT(worst, 0.05);
}

TEST(Solvability, MatchesExactConditionalMargin) {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int r = 0; r < 200; ++r) {
    LinearGaussianParams p;
    p.alpha_U = u(rng);
    p.beta_U = u(rng);
    p.gamma_U = u(rng);
    p.gamma_X = u(rng);
    p.gamma_W = u(rng);
    const double m = solvability_linear_gaussian(p).margin;
    const double exact = exact_margin(p);
    EXPECT_NEAR(m, exact, 1e-9 * (1.0 + std::abs(exact)));
  }
}

TEST(Solvability, StatedExamples) {
  EXPECT_EQ(solvability_linear_gaussian(example1_params(1.0)).status, Solvability::solvable);
  EXPECT_LT(std::abs(solvability_linear_gaussian(example1_params(0.61)).margin), 1e-2);
  LinearGaussianParams b4 = b4_params();
  const SolvabilityResult r = solvability_linear_gaussian(b4);
  EXPECT_EQ(r.status, Solvability::solvable);
  EXPECT_NEAR(r.margin, 0.75, 1e-15);
  b4.alpha_U = 0.0;
  try {
    solvability_linear_gaussian(b4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::undefined_solution);
  }
}

TEST(Solvability, SingleSignChangeNearStatedBoundary) {
  int changes = 0;
  double prev = solvability_linear_gaussian(example1_params(0.0)).margin;
  for (int k = 1; k <= 2000; ++k) {
    const double m = solvability_linear_gaussian(example1_params(k * 0.001)).margin;
    if ((m > 0.0) != (prev > 0.0)) ++changes;
    prev = m;
  }
  EXPECT_EQ(changes, 1);
  double lo = 0.0, hi = 2.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (solvability_linear_gaussian(example1_params(mid)).margin > 0.0 ? hi : lo) = mid;
  }
  const double closed_form = (-15.0 + 36.0 * std::sqrt(5.0)) / (72.0 + 16.0 * std::sqrt(5.0));
  EXPECT_NEAR(lo, 0.6108, 0.02);
  EXPECT_NEAR(lo, closed_form, 0.02);
}

TEST(Catalog, KnownAndUnknownIds) {
  for (const auto& id : scenario_ids()) {
    const Scenario s = make_scenario(id);
    EXPECT_EQ(s.id, id);
    const Dataset a = s.generate(60, 3);
    const Dataset b = s.generate(60, 3);
    EXPECT_EQ(a.size(), 60);
    EXPECT_EQ(a.y.values, b.y.values) << id;
  }
  try {
    make_scenario("nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_config);
    EXPECT_NE(std::string(e.what()).find("sec611-h0"), std::string::npos);
  }
}
