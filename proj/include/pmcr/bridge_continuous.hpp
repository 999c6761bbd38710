#pragma once

// Kernel estimate of the bridge H(w, t) solving E[phi(Y, t) - H(W, t) | X] = 0.
// Coefficients solve (K_X K_W + n^2 lambda I) alpha = K_X phi, computed through
// pivoted-Cholesky factors K_W = R R^T and K_X = L L^T.

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <numeric>
#include <random>
#include <vector>

#include "pmcr/dataset.hpp"
#include "pmcr/error.hpp"
#include "pmcr/numerics.hpp"

namespace pmcr {

enum class Basis { complex_exp, sin, cos, identity, indicator };

inline const char* to_string(Basis b) {
  switch (b) {
    case Basis::complex_exp: return "complex_exp";
    case Basis::sin: return "sin";
    case Basis::cos: return "cos";
    case Basis::identity: return "identity";
    case Basis::indicator: return "indicator";
  }
  return "unknown";
}

inline std::complex<double> phi(double y, double t, Basis basis) {
  switch (basis) {
    case Basis::complex_exp: return {std::cos(t * y), std::sin(t * y)};
    case Basis::sin: return {std::sin(t * y), 0.0};
    case Basis::cos: return {std::cos(t * y), 0.0};
    case Basis::identity: return {y, 0.0};
    case Basis::indicator: return {y == t ? 1.0 : 0.0, 0.0};
  }
  return {};
}

/// Equi-spaced positive evaluation points t_1 < ... < t_K.
class TGrid {
 public:
  TGrid() = default;

  explicit TGrid(std::vector<double> points) : points_(std::move(points)) {
    for (double t : points_) {
      if (!(t > 0.0) || !std::isfinite(t)) throw Error(ErrorCode::invalid_config, "t-grid points must be positive");
    }
    if (points_.size() >= 2) {
      const double step = points_[1] - points_[0];
      if (!(step > 0.0)) throw Error(ErrorCode::invalid_config, "t-grid must be increasing");
      for (std::size_t k = 1; k + 1 < points_.size(); ++k) {
        if (std::abs((points_[k + 1] - points_[k]) - step) > 1e-12) {
          throw Error(ErrorCode::invalid_config, "t-grid must be equi-distant");
        }
      }
    }
  }

  /// K points k * t_max / K, k = 1..K.
  static TGrid uniform(int count, double t_max) {
    if (count < 1) throw Error(ErrorCode::invalid_config, "t-grid needs K >= 1");
    if (!(t_max > 0.0)) throw Error(ErrorCode::invalid_config, "t_max must be positive");
    std::vector<double> pts(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) pts[static_cast<std::size_t>(k)] = t_max * (k + 1) / count;
    return TGrid(std::move(pts));
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  double operator[](std::size_t k) const { return points_[k]; }
  const std::vector<double>& points() const { return points_; }

 private:
  std::vector<double> points_;
};

/// phi(y_i, t_k) as an n x K complex matrix; the identity basis yields a single column.
inline ComplexMatrix phi_matrix(const RealVector& y, const TGrid& grid, Basis basis) {
  if (basis == Basis::identity) {
    ComplexMatrix out(y.size(), 1);
    out.re.col(0) = y;
    return out;
  }
  if (grid.empty()) throw Error(ErrorCode::invalid_config, "empty t-grid");
  const Index n = y.size();
  const Index k_count = static_cast<Index>(grid.size());
  ComplexMatrix out(n, k_count);
  for (Index k = 0; k < k_count; ++k) {
    const double t = grid[static_cast<std::size_t>(k)];
    for (Index i = 0; i < n; ++i) {
      const auto v = phi(y(i), t, basis);
      out.re(i, k) = v.real();
      out.im(i, k) = v.imag();
    }
  }
  return out;
}

/// Conditioning points X (with covariates appended) and bridge inputs W (with covariates appended).
struct BridgeProblem {
  RealMatrix x;
  RealMatrix w;
  RealVector y;

  Index size() const { return y.size(); }

  static BridgeProblem from(const Dataset& data) {
    data.validate();
    std::vector<RealVector> xs{data.x.values};
    std::vector<RealVector> ws{data.w.values};
    for (const auto& c : data.covariates) {
      xs.push_back(c.values);
      ws.push_back(c.values);
    }
    return {stack_columns(xs), stack_columns(ws), data.y.values};
  }
};

namespace detail {

inline RealMatrix stack_re_im(const ComplexMatrix& m) {
  RealMatrix out(m.rows(), 2 * m.cols());
  out << m.re, m.im;
  return out;
}

inline ComplexMatrix split_re_im(const RealMatrix& m) {
  const Index k = m.cols() / 2;
  return {m.leftCols(k), m.rightCols(k)};
}

inline RealMatrix select_rows(const RealMatrix& m, const std::vector<Index>& rows) {
  RealMatrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

}  // namespace detail

/// The fitted linear map phi -> fitted values at the training points, kept for reuse by the
/// bootstrap. Immutable after construction.
class BridgeSmoother {
 public:
  BridgeSmoother(const RealMatrix& x, const RealMatrix& w, const ProductKernel& kernel_x,
                 const ProductKernel& kernel_w, double lambda)
      : r_(gram_factor(w, kernel_w)), l_(gram_factor(x, kernel_x)) {
    const double n = static_cast<double>(x.rows());
    c_ = n * n * lambda;
    a_ = l_.transpose() * r_;
    RealMatrix system = a_.transpose() * a_;
    system.diagonal().array() += c_;
    try {
      system_.compute(system, 0.0);
    } catch (const IllConditionedError& e) {
      throw Error(ErrorCode::estimation_failure, e.what());
    }
  }

  double regularization() const { return c_; }
  Index rank_w() const { return r_.cols(); }
  Index rank_x() const { return l_.cols(); }

  RealMatrix beta(const RealMatrix& rhs) const { return system_.solve(a_.transpose() * (l_.transpose() * rhs)); }

  /// S rhs: fitted values at the training points.
  RealMatrix fitted(const RealMatrix& rhs) const { return r_ * beta(rhs); }

  /// S^T m.
  RealMatrix transpose_apply(const RealMatrix& m) const {
    return l_ * (a_ * system_.solve(r_.transpose() * m));
  }

  /// Representer coefficients alpha for the given right-hand sides.
  RealMatrix coefficients(const RealMatrix& rhs, double* certificate = nullptr) const {
    const RealMatrix projected = l_.transpose() * rhs;
    const RealMatrix reduced_rhs = a_.transpose() * projected;
    const RealMatrix b = system_.solve(reduced_rhs);
    if (certificate) {
      const double scale = 1.0 + (reduced_rhs.size() ? reduced_rhs.cwiseAbs().maxCoeff() : 0.0);
      *certificate = system_.residual(b, reduced_rhs) / scale;
    }
    return l_ * (projected - a_ * b) / c_;
  }

 private:
  RealMatrix r_;
  RealMatrix l_;
  RealMatrix a_;
  RegularizedSpdFactor system_;
  double c_ = 0.0;
};

enum class BridgeMode { pmcr, mmr };

struct BridgeEstimate {
  BridgeMode mode = BridgeMode::pmcr;
  Basis basis = Basis::complex_exp;
  TGrid t_grid;  // empty in mmr mode
  ComplexMatrix alpha;  // n x (grid size, or 1 in mmr mode)
  RealMatrix w_train;
  ProductKernel kernel_w;
  double lambda = 0.0;
  std::shared_ptr<const BridgeSmoother> smoother;

  Index columns() const { return alpha.cols(); }

  /// H(w, t_k) = alpha_k^T k_W(w, w_train) for each row of `w`.
  ComplexMatrix evaluate(const RealMatrix& w) const {
    const RealMatrix k = cross_gram(w, w_train, kernel_w);
    return {k * alpha.re, k * alpha.im};
  }
};

inline void validate_continuous_inputs(const BridgeProblem& p, double lambda, Basis basis) {
  if (p.size() < 2) throw Error(ErrorCode::insufficient_data, "bridge fit needs n >= 2");
  if (p.x.rows() != p.size() || p.w.rows() != p.size()) {
    throw Error(ErrorCode::invalid_input, "x, w and y differ in length");
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error(ErrorCode::invalid_config, "lambda must be positive");
  if (basis == Basis::indicator) {
    throw Error(ErrorCode::invalid_config, "indicator basis is only defined for categorical outcomes");
  }
  if (!p.y.allFinite()) throw Error(ErrorCode::invalid_input, "non-finite outcome values");
}

inline BridgeEstimate fit(const BridgeProblem& problem, const TGrid& t_grid, double lambda,
                          const ProductKernel& kernel_w, const ProductKernel& kernel_x, Basis basis) {
  validate_continuous_inputs(problem, lambda, basis);
  BridgeEstimate est;
  est.mode = basis == Basis::identity ? BridgeMode::mmr : BridgeMode::pmcr;
  est.basis = basis;
  est.t_grid = est.mode == BridgeMode::mmr ? TGrid() : t_grid;
  est.w_train = problem.w;
  est.kernel_w = kernel_w;
  est.lambda = lambda;
  est.smoother = std::make_shared<const BridgeSmoother>(problem.x, problem.w, kernel_x, kernel_w, lambda);

  const ComplexMatrix targets = phi_matrix(problem.y, est.t_grid, basis);
  double certificate = 0.0;
  const RealMatrix alpha = est.smoother->coefficients(detail::stack_re_im(targets), &certificate);
  if (!(certificate <= 1e-7) || !alpha.allFinite()) {
    throw Error(ErrorCode::estimation_failure, "bridge system residual exceeds 1e-7 relative");
  }
  est.alpha = detail::split_re_im(alpha);
  return est;
}

inline BridgeEstimate fit(const Dataset& data, const TGrid& t_grid, double lambda, const ProductKernel& kernel_w,
                          const ProductKernel& kernel_x, Basis basis) {
  return fit(BridgeProblem::from(data), t_grid, lambda, kernel_w, kernel_x, basis);
}

/// Residuals U_i(t_k) = phi(y_i, t_k) - H(w_i, t_k).
struct ResidualField {
  TGrid t_grid;
  ComplexMatrix values;  // n x K

  Index size() const { return values.rows(); }
  Index columns() const { return values.cols(); }
};

inline ResidualField residuals(const BridgeEstimate& bridge, const BridgeProblem& problem) {
  if (problem.w.cols() != bridge.w_train.cols()) {
    throw Error(ErrorCode::invalid_input, "bridge input dimension mismatch");
  }
  if (problem.w.rows() != problem.y.size()) throw Error(ErrorCode::invalid_input, "w and y differ in length");
  ComplexMatrix targets = phi_matrix(problem.y, bridge.t_grid, bridge.basis);
  if (targets.cols() != bridge.columns()) throw Error(ErrorCode::invalid_input, "t-grid does not match the bridge");
  const ComplexMatrix fitted = bridge.evaluate(problem.w);
  targets.re -= fitted.re;
  targets.im -= fitted.im;
  return {bridge.t_grid, std::move(targets)};
}

/// 50 log-spaced values from 4.9e-6 to 0.25.
inline std::vector<double> default_lambda_grid() {
  std::vector<double> grid(50);
  const double lo = std::log(4.9e-6);
  const double hi = std::log(0.25);
  for (int i = 0; i < 50; ++i) grid[static_cast<std::size_t>(i)] = std::exp(lo + (hi - lo) * i / 49.0);
  grid.back() = 0.25;
  grid.front() = 4.9e-6;
  return grid;
}

struct LambdaSelection {
  double lambda = 0.0;
  std::vector<double> lambdas;
  std::vector<double> risks;  // held-out risk per candidate, same order as `lambdas`
};

/// K-fold cross-validation of lambda on the held-out unpenalized risk
/// sum_{i,j in fold} Re(Delta_i conj(Delta_j)) K_X[i,j] / m^2, averaged over folds and t.
/// Ties go to the larger lambda.
inline LambdaSelection select_lambda(const BridgeProblem& problem, const TGrid& t_grid,
                                     const std::vector<double>& lambda_grid, int folds,
                                     const ProductKernel& kernel_w, const ProductKernel& kernel_x, Basis basis,
                                     std::uint64_t seed) {
  if (lambda_grid.empty()) throw Error(ErrorCode::invalid_config, "empty lambda grid");
  for (double l : lambda_grid) {
    if (!(l > 0.0) || !std::isfinite(l)) throw Error(ErrorCode::invalid_config, "lambda candidates must be positive");
  }
  if (folds < 2) throw Error(ErrorCode::invalid_config, "cross-validation needs at least two folds");
  validate_continuous_inputs(problem, lambda_grid.front(), basis);
  const Index n = problem.size();
  if (n < folds) throw Error(ErrorCode::invalid_config, "cross-validation fold would be empty");

  LambdaSelection out;
  out.lambdas = lambda_grid;
  out.risks.assign(lambda_grid.size(), 0.0);
  if (lambda_grid.size() == 1) {
    out.lambda = lambda_grid.front();
    return out;
  }

  const TGrid grid = basis == Basis::identity ? TGrid() : t_grid;
  const RealMatrix targets = detail::stack_re_im(phi_matrix(problem.y, grid, basis));
  const double columns = static_cast<double>(targets.cols() / 2);

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  for (int f = 0; f < folds; ++f) {
    std::vector<Index> train, test;
    for (std::size_t i = 0; i < order.size(); ++i) {
      (static_cast<int>(i % static_cast<std::size_t>(folds)) == f ? test : train).push_back(order[i]);
    }
    const RealMatrix x_train = detail::select_rows(problem.x, train);
    const RealMatrix w_train = detail::select_rows(problem.w, train);
    const RealMatrix x_test = detail::select_rows(problem.x, test);
    const RealMatrix w_test = detail::select_rows(problem.w, test);
    const RealMatrix phi_train = detail::select_rows(targets, train);
    const RealMatrix phi_test = detail::select_rows(targets, test);

    const RealMatrix r = gram_factor(w_train, kernel_w);
    const RealMatrix l = gram_factor(x_train, kernel_x);
    const RealMatrix l_test = gram_factor(x_test, kernel_x);
    const RealMatrix a = l.transpose() * r;
    const RealMatrix gram_reduced = a.transpose() * a;
    const RealMatrix projected = l.transpose() * phi_train;
    const RealMatrix reduced_rhs = a.transpose() * projected;
    const RealMatrix predictor = cross_gram(w_test, w_train, kernel_w) * l;
    const double m_train = static_cast<double>(train.size());
    const double m_test = static_cast<double>(test.size());

    for (std::size_t j = 0; j < lambda_grid.size(); ++j) {
      const double c = m_train * m_train * lambda_grid[j];
      RealMatrix system = gram_reduced;
      system.diagonal().array() += c;
      const RealMatrix b = RegularizedSpdFactor(system, 0.0).solve(reduced_rhs);
      const RealMatrix held_out = phi_test - predictor * (projected - a * b) / c;
      const double risk = (l_test.transpose() * held_out).squaredNorm() / (m_test * m_test) / columns;
      out.risks[j] += risk / folds;
    }
  }

  std::size_t best = 0;
  for (std::size_t j = 1; j < lambda_grid.size(); ++j) {
    const double tie = 1e-12 * std::abs(out.risks[best]);
    if (out.risks[j] < out.risks[best] - tie ||
        (std::abs(out.risks[j] - out.risks[best]) <= tie && lambda_grid[j] > lambda_grid[best])) {
      best = j;
    }
  }
  out.lambda = lambda_grid[best];
  return out;
}

}  // namespace pmcr
