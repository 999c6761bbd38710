#include <gtest/gtest.h>

#include <complex>
#include <random>

#include "oracles.hpp"
#include "pmcr/scenarios.hpp"
#include "pmcr/teststats.hpp"

using namespace pmcr;

namespace {

struct Instance {
  ComplexVector u;
  RealVector c;
  std::vector<std::complex<double>> u_list;
  std::vector<double> c_list;
};

Instance random_instance(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Instance s{ComplexVector(n), RealVector(n), {}, {}};
  for (Index i = 0; i < n; ++i) {
    s.u.re(i) = z(rng);
    s.u.im(i) = z(rng);
    s.c(i) = z(rng);
    s.u_list.emplace_back(s.u.re(i), s.u.im(i));
    s.c_list.push_back(s.c(i));
  }
  return s;
}

}  // namespace

TEST(SIntegratedSquare, TrivialCases) {
  const WeightMeasure mu;
  EXPECT_EQ(s_integrated_square(ComplexVector(10), RealVector(RealVector::LinSpaced(10, 0, 1)), mu), 0.0);
  const ComplexVector one(RealVector::Ones(1), RealVector::Zero(1));
  EXPECT_DOUBLE_EQ(s_integrated_square(one, RealVector(RealVector::Constant(1, 0.4)), mu), 1.0);
  EXPECT_THROW(s_integrated_square(ComplexVector(3), RealVector(RealVector::Zero(4)), mu), Error);
  EXPECT_THROW(s_integrated_square(one, RealVector(RealVector::Zero(1)), WeightMeasure{MeasureFamily::gaussian, 0.0}), Error);
}

TEST(SIntegratedSquare, MatchesGaussHermiteQuadrature) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> size(5, 200);
  const double scales[] = {0.5, 1.0, 2.0};
  for (int r = 0; r < 100; ++r) {
    const Instance s = random_instance(size(rng), rng);
    const double sigma = scales[r % 3];
    const double closed = s_integrated_square(s.u, s.c, WeightMeasure{MeasureFamily::gaussian, sigma});
    const double quad = oracle::s_integral(s.u_list, s.c_list, sigma, 200);
    EXPECT_NEAR(closed / quad, 1.0, 1e-8) << "instance " << r << " sigma " << sigma;
  }
}

TEST(SIntegratedSquare, TwoProxyProductMeasure) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  for (int r = 0; r < 10; ++r) {
    const Instance s = random_instance(30, rng);
    RealMatrix points(30, 2);
    std::vector<double> second;
    for (Index i = 0; i < 30; ++i) {
      points(i, 0) = s.c(i);
      points(i, 1) = z(rng);
      second.push_back(points(i, 1));
    }
    const double closed = s_integrated_square(s.u, points, WeightMeasure{});
    EXPECT_NEAR(closed / oracle::s_integral_2d(s.u_list, s.c_list, second, 1.0), 1.0, 1e-8);
  }
}

TEST(SIntegratedSquare, PhaseAndScaleInvariance) {
  std::mt19937_64 rng(3);
  const WeightMeasure mu;
  for (int r = 0; r < 20; ++r) {
    const Instance s = random_instance(40, rng);
    const double base = s_integrated_square(s.u, s.c, mu);
    const double theta = 0.3 * r;
    const ComplexVector rotated(std::cos(theta) * s.u.re - std::sin(theta) * s.u.im,
                                std::sin(theta) * s.u.re + std::cos(theta) * s.u.im);
    EXPECT_NEAR(s_integrated_square(rotated, s.c, mu), base, 1e-12 * base);
    const double c = -2.5 + 0.2 * r;
    const ComplexVector scaled(c * s.u.re, c * s.u.im);
    EXPECT_NEAR(s_integrated_square(scaled, s.c, mu), c * c * base, 1e-12 * c * c * base + 1e-300);
  }
}

TEST(SIntegrator, FactoredFormMatchesDense) {
  std::mt19937_64 rng(4);
  const Instance s = random_instance(300, rng);
  const SIntegrator rho(RealMatrix(s.c), WeightMeasure{});
  const RealVector v = rho.per_column(RealMatrix(s.u.re), RealMatrix(s.u.im));
  const double dense = s_integrated_square(s.u, s.c, WeightMeasure{});
  EXPECT_NEAR(v(0), dense, 1e-10 * dense);
}

TEST(DeltaContinuous, TrivialCases) {
  std::mt19937_64 rng(5);
  const Instance s = random_instance(25, rng);
  const RealMatrix cond(s.c);
  ResidualField one{TGrid({1.0}), ComplexMatrix(RealMatrix(s.u.re), RealMatrix(s.u.im))};
  const StatisticValue v1 = delta_continuous(one, cond, WeightMeasure{});
  EXPECT_NEAR(v1.delta, s_integrated_square(s.u, s.c, WeightMeasure{}), 1e-12);
  EXPECT_EQ(v1.argmax_t, 0);

  RealMatrix re(25, 4), im(25, 4);
  for (Index k = 0; k < 4; ++k) {
    re.col(k) = s.u.re;
    im.col(k) = s.u.im;
  }
  const StatisticValue flat = delta_continuous({TGrid::uniform(4, 2.0), {re, im}}, cond, WeightMeasure{});
  EXPECT_EQ(flat.argmax_t, 0);
  EXPECT_EQ(flat.delta, flat.per_t(0));
  EXPECT_EQ(flat.per_t.maxCoeff(), flat.per_t.minCoeff());
}

TEST(DeltaContinuous, BatchedMatchesPerTLoop) {
  RandomScmConfig cfg;
  cfg.hypothesis = Hypothesis::h1;
  cfg.seed = 17;
  const Dataset d = gen_random_scm(cfg, 1000);
  BridgeProblem p = BridgeProblem::from(d);
  p.x.col(0) = standardize(p.x.col(0));
  p.w.col(0) = standardize(p.w.col(0));
  p.y = standardize(p.y);
  const TGrid grid = TGrid::uniform(100, 3.0);
  const BridgeEstimate est =
      fit(p, grid, 1e-4, median_heuristic_kernel(p.w), median_heuristic_kernel(p.x), Basis::complex_exp);
  const ResidualField field = residuals(est, p);
  const StatisticValue batched = delta_continuous(field, p.x, WeightMeasure{});
  double best = -1.0;
  Index arg = -1;
  for (Index k = 0; k < 100; ++k) {
    const double v = s_integrated_square(field.values.col(k), p.x, WeightMeasure{});
    EXPECT_NEAR(batched.per_t(k), v, 1e-12 * (1.0 + v));
    if (v > best) {
      best = v;
      arg = k;
    }
  }
  EXPECT_NEAR(batched.delta, best, 1e-12 * (1.0 + best));
  EXPECT_EQ(batched.argmax_t, arg);
  EXPECT_GE(batched.delta, 0.0);
}

TEST(DeltaDiscrete, TrivialCases) {
  const CategoricalTable pop = population_table(DiscreteDGP::three_level(Hypothesis::h0), Basis::complex_exp,
                                                TGrid::uniform(5, 3.0).points());
  const StatisticValue zero = delta_discrete(pop, ComplexMatrix(3, 5), TGrid::uniform(5, 3.0), WeightMeasure{});
  EXPECT_EQ(zero.delta, 0.0);

  std::mt19937_64 rng(6);
  const CategoricalTable t =
      tabulate(gen_discrete(DiscreteDGP::three_level(Hypothesis::h1), 400, rng), TGrid({1.3}), Basis::complex_exp);
  const ComplexMatrix proj = projected_residual(t, ols_bridge(t));
  const StatisticValue v = delta_discrete(t, proj, TGrid({1.3}), WeightMeasure{});
  const RealVector tn_re = std::sqrt(400.0) * t.d_hat.asDiagonal() * proj.re.col(0);
  const RealVector tn_im = std::sqrt(400.0) * t.d_hat.asDiagonal() * proj.im.col(0);
  EXPECT_NEAR(v.delta, tn_re.squaredNorm() + tn_im.squaredNorm(), 1e-12);
}

TEST(DeltaDiscrete, PerSampleSumEqualsProjectionForm) {
  std::mt19937_64 rng(7);
  for (int r = 0; r < 10; ++r) {
    const DiscreteDGP dgp = r < 5 ? DiscreteDGP::three_level(Hypothesis::h1) : DiscreteDGP::random(Hypothesis::h1, rng);
    const TGrid grid = TGrid::uniform(30, 3.0);
    const CategoricalTable t = tabulate(gen_discrete(dgp, 2000, rng), grid, Basis::complex_exp);
    const DiscreteBridge b = ols_bridge(t);
    const StatisticValue v = delta_discrete(t, projected_residual(t, b), grid, WeightMeasure{});
    // T_n(t) = n^{-1/2} sum_i U_i(t) e(x_i), accumulated one sample at a time.
    const ComplexMatrix u = discrete_residual_field(t, b);
    const double n = static_cast<double>(t.n);
    const RealVector w = t_weights(grid, WeightMeasure{});
    double delta = 0.0;
    for (Index k = 0; k < 30; ++k) {
      std::vector<std::complex<double>> tn(static_cast<std::size_t>(t.x_count()));
      for (Index i = 0; i < u.rows(); ++i) {
        tn[static_cast<std::size_t>(t.x_code[static_cast<std::size_t>(i)])] += std::complex<double>(u.re(i, k), u.im(i, k));
      }
      double norm = 0.0;
      for (const auto& e : tn) norm += std::norm(e) / n;
      EXPECT_NEAR(v.per_t(k), norm, 1e-10 * (1.0 + norm));
      delta += w(k) * norm;
    }
    EXPECT_NEAR(v.delta, delta, 1e-10 * (1.0 + delta));
  }
}

TEST(TWeights, NormalizedGaussian) {
  const TGrid grid = TGrid::uniform(10, 3.0);
  const RealVector w = t_weights(grid, WeightMeasure{MeasureFamily::gaussian, 1.5});
  EXPECT_NEAR(w.sum(), 1.0, 1e-15);
  for (Index k = 1; k < 10; ++k) {
    const double a = grid[static_cast<std::size_t>(k)] / 1.5;
    const double b = grid[0] / 1.5;
    EXPECT_NEAR(w(k) / w(0), std::exp(-0.5 * (a * a - b * b)), 1e-14);
  }
}
