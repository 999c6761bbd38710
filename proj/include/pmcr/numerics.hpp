#pragma once

// Dense linear algebra and Gaussian-kernel primitives shared by the estimators.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "pmcr/error.hpp"

namespace pmcr {

using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Complex values stored as paired real vectors.
struct ComplexVector {
  RealVector re;
  RealVector im;

  ComplexVector() = default;
  ComplexVector(RealVector re_part, RealVector im_part)
      : re(std::move(re_part)), im(std::move(im_part)) {
    if (re.size() != im.size()) {
      throw Error(ErrorCode::invalid_input, "real and imaginary parts differ in length");
    }
  }
  explicit ComplexVector(Index n) : re(RealVector::Zero(n)), im(RealVector::Zero(n)) {}

  Index size() const { return re.size(); }
  RealVector squared_modulus() const { return re.array().square() + im.array().square(); }
};

/// Column k holds one complex vector; used for per-t quantities.
struct ComplexMatrix {
  RealMatrix re;
  RealMatrix im;

  ComplexMatrix() = default;
  ComplexMatrix(Index rows, Index cols)
      : re(RealMatrix::Zero(rows, cols)), im(RealMatrix::Zero(rows, cols)) {}
  ComplexMatrix(RealMatrix re_part, RealMatrix im_part)
      : re(std::move(re_part)), im(std::move(im_part)) {
    if (re.rows() != im.rows() || re.cols() != im.cols()) {
      throw Error(ErrorCode::invalid_input, "real and imaginary parts differ in shape");
    }
  }

  Index rows() const { return re.rows(); }
  Index cols() const { return re.cols(); }
  ComplexVector col(Index k) const { return {re.col(k), im.col(k)}; }
};

enum class KernelFamily { gaussian };

struct KernelConfig {
  KernelFamily family = KernelFamily::gaussian;
  double bandwidth = 1.0;
};

/// Product of per-coordinate Gaussian kernels; a single entry is the scalar case.
struct ProductKernel {
  std::vector<KernelConfig> coords;

  ProductKernel() = default;
  explicit ProductKernel(std::vector<KernelConfig> c) : coords(std::move(c)) {}
  static ProductKernel isotropic(std::size_t dims, double bandwidth) {
    return ProductKernel(std::vector<KernelConfig>(dims, KernelConfig{KernelFamily::gaussian, bandwidth}));
  }

  std::size_t dims() const { return coords.size(); }
  std::vector<double> bandwidths() const {
    std::vector<double> out;
    for (const auto& c : coords) out.push_back(c.bandwidth);
    return out;
  }
};

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(ErrorCode::invalid_input, std::string("non-finite ") + what);
}

inline void validate(const KernelConfig& cfg) {
  if (!(cfg.bandwidth > 0.0) || !std::isfinite(cfg.bandwidth)) {
    throw Error(ErrorCode::invalid_config, "kernel bandwidth must be positive and finite");
  }
}

inline double gaussian_kernel(double a, double b, const KernelConfig& cfg) {
  validate(cfg);
  require_finite(a, "kernel argument");
  require_finite(b, "kernel argument");
  const double d = (a - b) / cfg.bandwidth;
  return std::exp(-0.5 * d * d);
}

namespace detail {

inline std::vector<double> inverse_two_h2(const ProductKernel& k, Index dims) {
  if (static_cast<Index>(k.dims()) != dims) {
    throw Error(ErrorCode::invalid_input, "kernel dimension does not match point dimension");
  }
  std::vector<double> out;
  for (const auto& c : k.coords) {
    validate(c);
    out.push_back(0.5 / (c.bandwidth * c.bandwidth));
  }
  return out;
}

inline void require_finite(const RealMatrix& m, const char* what) {
  if (!m.allFinite()) throw Error(ErrorCode::invalid_input, std::string("non-finite values in ") + what);
}

inline double product_kernel(const RealMatrix& a, Index i, const RealMatrix& b, Index j,
                             const std::vector<double>& scale) {
  double s = 0.0;
  for (Index d = 0; d < a.cols(); ++d) {
    const double diff = a(i, d) - b(j, d);
    s += scale[static_cast<std::size_t>(d)] * diff * diff;
  }
  return std::exp(-s);
}

}  // namespace detail

/// Points are rows of an n x d matrix.
inline RealMatrix gram(const RealMatrix& points, const ProductKernel& kernel) {
  const auto scale = detail::inverse_two_h2(kernel, points.cols());
  detail::require_finite(points, "Gram points");
  const Index n = points.rows();
  RealMatrix g(n, n);
  for (Index j = 0; j < n; ++j) {
    g(j, j) = 1.0;
    for (Index i = j + 1; i < n; ++i) {
      const double v = detail::product_kernel(points, i, points, j, scale);
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

inline RealMatrix cross_gram(const RealMatrix& a, const RealMatrix& b, const ProductKernel& kernel) {
  if (a.cols() != b.cols()) throw Error(ErrorCode::invalid_input, "point dimensions differ");
  const auto scale = detail::inverse_two_h2(kernel, a.cols());
  detail::require_finite(a, "Gram points");
  detail::require_finite(b, "Gram points");
  RealMatrix g(a.rows(), b.rows());
  for (Index j = 0; j < b.rows(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) g(i, j) = detail::product_kernel(a, i, b, j, scale);
  }
  return g;
}

/// Median of |p_i - p_j| over i < j (mean of the two middle values for an even count).
inline double median_heuristic(std::span<const double> points) {
  const std::size_t n = points.size();
  if (n < 2) throw Error(ErrorCode::degenerate_bandwidth, "median heuristic needs at least two points");
  for (double p : points) require_finite(p, "point");
  std::vector<double> dist;
  dist.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) dist.push_back(std::abs(points[i] - points[j]));
  }
  const std::size_t m = dist.size();
  const std::size_t mid = m / 2;
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid), dist.end());
  double med = dist[mid];
  if (m % 2 == 0) {
    const double lower = *std::max_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (med + lower);
  }
  if (!(med > 0.0)) {
    throw Error(ErrorCode::degenerate_bandwidth, "median pairwise distance is zero");
  }
  return med;
}

inline double median_heuristic(const RealVector& points) {
  return median_heuristic(std::span<const double>(points.data(), static_cast<std::size_t>(points.size())));
}

/// Per-coordinate median-heuristic bandwidths for a product kernel.
inline ProductKernel median_heuristic_kernel(const RealMatrix& points) {
  std::vector<KernelConfig> coords;
  for (Index d = 0; d < points.cols(); ++d) {
    const RealVector col = points.col(d);
    coords.push_back({KernelFamily::gaussian, median_heuristic(col)});
  }
  return ProductKernel(std::move(coords));
}

/// Greedy pivoted Cholesky of a PSD matrix accessed by diagonal and columns.
/// Stops once the largest remaining diagonal entry is at most tol * (largest initial diagonal),
/// so the returned n x r factor L satisfies 0 <= (A - L L^T)_ii <= tol * max_i A_ii.
template <class ColumnFn>
RealMatrix pivoted_cholesky(Index n, const RealVector& diagonal, ColumnFn&& column, double tol) {
  RealVector d = diagonal;
  const double scale = n > 0 ? d.maxCoeff() : 0.0;
  RealMatrix factor(n, std::min<Index>(n, 32));
  Index rank = 0;
  RealVector col(n);
  while (rank < n) {
    Index pivot = 0;
    const double top = d.maxCoeff(&pivot);
    if (!(top > tol * scale) || top <= 0.0) break;
    if (rank == factor.cols()) factor.conservativeResize(Eigen::NoChange, std::min<Index>(n, 2 * rank));
    column(pivot, col);
    if (rank > 0) col.noalias() -= factor.leftCols(rank) * factor.row(pivot).head(rank).transpose();
    const double root = std::sqrt(top);
    col /= root;
    col(pivot) = root;
    factor.col(rank) = col;
    d.array() -= col.array().square();
    d(pivot) = 0.0;
    d = d.cwiseMax(0.0);
    ++rank;
  }
  return factor.leftCols(rank);
}

inline constexpr double kGramFactorTolerance = 1e-13;

/// Pivoted-Cholesky factor of the Gram matrix of `points`, accurate to the stated tolerance.
inline RealMatrix gram_factor(const RealMatrix& points, const ProductKernel& kernel,
                              double tol = kGramFactorTolerance) {
  const auto scale = detail::inverse_two_h2(kernel, points.cols());
  detail::require_finite(points, "Gram points");
  const Index n = points.rows();
  auto column = [&](Index p, RealVector& out) {
    for (Index i = 0; i < n; ++i) out(i) = detail::product_kernel(points, i, points, p, scale);
  };
  return pivoted_cholesky(n, RealVector::Ones(n), column, tol);
}

/// Cholesky factorization of A + jitter*I with the escalation policy used by every estimator:
/// start at the requested jitter (or 1e-12*trace/n when that is zero and the first attempt fails),
/// multiply by 10 on failure, and give up beyond 1e-4*trace/n.
class RegularizedSpdFactor {
 public:
  RegularizedSpdFactor() = default;

  RegularizedSpdFactor(const RealMatrix& a, double jitter) { compute(a, jitter); }

  void compute(const RealMatrix& a, double jitter) {
    if (a.rows() != a.cols()) throw Error(ErrorCode::invalid_input, "matrix is not square");
    if (jitter < 0.0 || !std::isfinite(jitter)) throw Error(ErrorCode::invalid_config, "jitter must be >= 0");
    if (!a.allFinite()) throw Error(ErrorCode::invalid_input, "non-finite matrix entries");
    const Index n = a.rows();
    const double trace = std::max(a.trace(), 0.0);
    const double mean_diag = n > 0 ? trace / static_cast<double>(n) : 0.0;
    const double max_jitter = std::max(1e-4 * mean_diag, jitter);
    double current = jitter;
    for (;;) {
      llt_.compute(a + current * RealMatrix::Identity(n, n));
      if (llt_.info() == Eigen::Success && factor_is_sound()) {
        jitter_ = current;
        matrix_ = a;
        return;
      }
      const double next = current > 0.0 ? current * 10.0 : std::max(1e-12 * mean_diag, 1e-300);
      if (next > max_jitter * (1.0 + 1e-12)) break;
      current = next;
    }
    throw IllConditionedError("symmetric system remains singular after jitter escalation",
                              condition_estimate(a));
  }

  double jitter() const { return jitter_; }
  Index order() const { return matrix_.rows(); }
  const RealMatrix& matrix() const { return matrix_; }

  RealMatrix solve(const RealMatrix& b) const {
    if (b.rows() != order()) throw Error(ErrorCode::invalid_input, "right-hand side has the wrong row count");
    return llt_.solve(b);
  }

  /// max |(A + jitter I) X - B|
  double residual(const RealMatrix& x, const RealMatrix& b) const {
    if (b.size() == 0) return 0.0;
    RealMatrix r = matrix_ * x + jitter_ * x - b;
    return r.cwiseAbs().maxCoeff();
  }

  static double condition_estimate(const RealMatrix& a) {
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(a, Eigen::EigenvaluesOnly);
    const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
    const double lo = es.eigenvalues().minCoeff();
    return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  }

 private:
  bool factor_is_sound() const {
    const RealVector diag = llt_.matrixLLT().diagonal();
    return diag.allFinite() && diag.minCoeff() > 0.0;
  }

  Eigen::LLT<RealMatrix> llt_;
  RealMatrix matrix_;
  double jitter_ = 0.0;
};

struct SpdSolution {
  RealMatrix x;
  double jitter = 0.0;
};

/// Solves (A + jitter I) X = B for symmetric A, escalating jitter until the residual satisfies
/// max|(A + jitter I) X - B| <= 1e-8 (1 + max|B|).
inline SpdSolution solve_regularized_spd(const RealMatrix& a, const RealMatrix& b, double jitter) {
  if (a.rows() != a.cols()) throw Error(ErrorCode::invalid_input, "matrix is not square");
  if (b.rows() != a.rows()) throw Error(ErrorCode::invalid_input, "right-hand side has the wrong row count");
  const double bound = 1e-8 * (1.0 + (b.size() ? b.cwiseAbs().maxCoeff() : 0.0));
  const double trace = std::max(a.trace(), 0.0);
  const double max_jitter = std::max(1e-4 * trace / static_cast<double>(std::max<Index>(a.rows(), 1)), jitter);
  double current = jitter;
  for (;;) {
    RegularizedSpdFactor factor(a, current);
    RealMatrix x = factor.solve(b);
    if (x.allFinite() && factor.residual(x, b) <= bound) return {std::move(x), factor.jitter()};
    const double next = factor.jitter() > 0.0 ? factor.jitter() * 10.0 : 1e-12 * trace / static_cast<double>(a.rows());
    if (!(next > 0.0) || next > max_jitter * (1.0 + 1e-12)) break;
    current = next;
  }
  throw IllConditionedError("residual bound not met after jitter escalation",
                            RegularizedSpdFactor::condition_estimate(a));
}

}  // namespace pmcr
