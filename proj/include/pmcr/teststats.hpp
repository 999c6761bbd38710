#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "pmcr/bridge_continuous.hpp"
#include "pmcr/bridge_discrete.hpp"
#include "pmcr/error.hpp"
#include "pmcr/numerics.hpp"

namespace pmcr {

enum class MeasureFamily { gaussian };

/// Normal(0, scale^2) weight over the index s (and over t in the discrete statistic).
struct WeightMeasure {
  MeasureFamily family = MeasureFamily::gaussian;
  double scale = 1.0;

  void validate() const {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw Error(ErrorCode::invalid_config, "measure scale must be positive");
  }

  /// rho(c_i, c_j) = exp(-scale^2 |c_i - c_j|^2 / 2) as a product kernel over `dims` coordinates.
  ProductKernel kernel(std::size_t dims) const {
    validate();
    return ProductKernel::isotropic(dims, 1.0 / scale);
  }
};

struct StatisticValue {
  double delta = 0.0;
  RealVector per_t;
  Index argmax_t = 0;
};

/// (1/n) sum_ij Re[U_i conj(U_j)] rho(c_i, c_j), summed directly.
inline double s_integrated_square(const ComplexVector& residual, const RealMatrix& cond_points,
                                  const WeightMeasure& measure) {
  if (residual.size() != cond_points.rows()) {
    throw Error(ErrorCode::invalid_input, "residual and conditioning points differ in length");
  }
  const Index n = residual.size();
  if (n == 0) return 0.0;
  const RealMatrix rho = gram(cond_points, measure.kernel(static_cast<std::size_t>(cond_points.cols())));
  const double v = residual.re.dot(rho * residual.re) + residual.im.dot(rho * residual.im);
  return std::max(v, 0.0) / static_cast<double>(n);
}

inline double s_integrated_square(const ComplexVector& residual, const RealVector& cond_points,
                                  const WeightMeasure& measure) {
  return s_integrated_square(residual, RealMatrix(cond_points), measure);
}

/// The rho Gram matrix of the conditioning points in factored form, shared by the observed
/// statistic and every bootstrap replicate.
class SIntegrator {
 public:
  SIntegrator(const RealMatrix& cond_points, const WeightMeasure& measure)
      : factor_(gram_factor(cond_points, measure.kernel(static_cast<std::size_t>(cond_points.cols())))),
        n_(cond_points.rows()) {
    if (n_ == 0) throw Error(ErrorCode::insufficient_data, "no conditioning points");
  }

  Index size() const { return n_; }
  const RealMatrix& factor() const { return factor_; }

  /// Per-column values for n x K real and imaginary parts.
  RealVector per_column(const RealMatrix& re, const RealMatrix& im) const {
    if (re.rows() != n_ || im.rows() != n_) {
      throw Error(ErrorCode::invalid_input, "residual and conditioning points differ in length");
    }
    return per_column_projected(factor_.transpose() * re, factor_.transpose() * im);
  }

  /// Same as per_column for inputs already multiplied by the factor transpose.
  RealVector per_column_projected(const RealMatrix& pre, const RealMatrix& pim) const {
    return (pre.colwise().squaredNorm() + pim.colwise().squaredNorm()).transpose() / static_cast<double>(n_);
  }

 private:
  RealMatrix factor_;
  Index n_;
};

inline StatisticValue max_statistic(RealVector per_t) {
  if (per_t.size() == 0) throw Error(ErrorCode::invalid_input, "empty t-grid");
  StatisticValue out;
  Index best = 0;
  for (Index k = 1; k < per_t.size(); ++k) {
    if (per_t(k) > per_t(best)) best = k;
  }
  out.delta = per_t(best);
  out.argmax_t = best;
  out.per_t = std::move(per_t);
  return out;
}

inline StatisticValue delta_continuous(const ResidualField& field, const SIntegrator& rho) {
  return max_statistic(rho.per_column(field.values.re, field.values.im));
}

inline StatisticValue delta_continuous(const ResidualField& field, const RealMatrix& cond_points,
                                       const WeightMeasure& measure) {
  return delta_continuous(field, SIntegrator(cond_points, measure));
}

/// Normalized Normal(0, scale^2) density weights at the grid points.
inline RealVector t_weights(const TGrid& grid, const WeightMeasure& measure) {
  measure.validate();
  if (grid.empty()) throw Error(ErrorCode::invalid_config, "empty t-grid");
  RealVector w(static_cast<Index>(grid.size()));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double z = grid[k] / measure.scale;
    w(static_cast<Index>(k)) = std::exp(-0.5 * z * z);
  }
  return w / w.sum();
}

/// Weights for a discrete statistic: Gaussian over the t-grid, uniform over indicator columns.
inline RealVector t_grid_weights(const CategoricalTable& table, const TGrid& t_grid, const WeightMeasure& measure) {
  if (static_cast<Index>(t_grid.size()) == table.columns()) return t_weights(t_grid, measure);
  if (table.columns() < 1) throw Error(ErrorCode::invalid_input, "table has no columns");
  return RealVector::Constant(table.columns(), 1.0 / static_cast<double>(table.columns()));
}

inline double weighted_statistic(const RealVector& per_t, const RealVector& weights) {
  return std::max(weights.dot(per_t), 0.0);
}

/// T_n(t_k) = sqrt(n) d_hat * projected[:, k]; delta = sum_k w_k |T_n(t_k)|^2.
inline StatisticValue delta_discrete(const CategoricalTable& table, const ComplexMatrix& projected,
                                     const RealVector& weights) {
  if (projected.cols() != weights.size()) throw Error(ErrorCode::invalid_input, "projected columns do not match weights");
  if (projected.rows() != table.x_count()) throw Error(ErrorCode::invalid_input, "projected rows do not match the table");
  const double n = static_cast<double>(table.n);
  const RealVector scale = table.d_hat.array().square() * n;
  RealVector per_t = (projected.re.array().square() + projected.im.array().square()).matrix().transpose() * scale;
  StatisticValue out;
  out.delta = weighted_statistic(per_t, weights);
  Index best = 0;
  for (Index k = 1; k < per_t.size(); ++k) {
    if (per_t(k) > per_t(best)) best = k;
  }
  out.argmax_t = best;
  out.per_t = std::move(per_t);
  return out;
}

inline StatisticValue delta_discrete(const CategoricalTable& table, const ComplexMatrix& projected,
                                     const TGrid& t_grid, const WeightMeasure& measure) {
  return delta_discrete(table, projected, t_grid_weights(table, t_grid, measure));
}

}  // namespace pmcr
