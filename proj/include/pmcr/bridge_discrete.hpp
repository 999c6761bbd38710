#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "pmcr/bridge_continuous.hpp"
#include "pmcr/dataset.hpp"
#include "pmcr/error.hpp"
#include "pmcr/numerics.hpp"

namespace pmcr {

/// Empirical conditional frequencies of a categorical (X, W, Y) sample.
/// Columns of q_hat follow the t-grid, or the Y levels for the indicator basis.
struct CategoricalTable {
  std::vector<std::string> x_levels;
  std::vector<std::string> w_levels;
  ComplexMatrix q_hat;  // |X| x K
  RealMatrix Q_hat;     // |X| x |W|, rows P(w | x)
  RealVector d_hat;     // n(x) / n
  Index n = 0;

  // per-sample data retained for residual fields and the bootstrap
  std::vector<int> x_code;
  std::vector<int> w_code;
  ComplexMatrix phi;  // n x K

  Index x_count() const { return Q_hat.rows(); }
  Index w_count() const { return Q_hat.cols(); }
  Index columns() const { return q_hat.cols(); }

  /// Exact-probability table; no per-sample data.
  static CategoricalTable population(const RealVector& p_x, const RealMatrix& w_given_x, const ComplexMatrix& q) {
    if (w_given_x.rows() != p_x.size() || q.rows() != p_x.size()) {
      throw Error(ErrorCode::invalid_input, "population table dimensions differ");
    }
    CategoricalTable t;
    for (Index i = 0; i < p_x.size(); ++i) t.x_levels.push_back("x" + std::to_string(i + 1));
    for (Index j = 0; j < w_given_x.cols(); ++j) t.w_levels.push_back("w" + std::to_string(j + 1));
    t.q_hat = q;
    t.Q_hat = w_given_x;
    t.d_hat = p_x;
    t.n = 1;
    return t;
  }
};

/// phi(y, t) columns for categorical outcome codes; the indicator basis yields one column per level.
inline ComplexMatrix categorical_phi(const Column& y, const TGrid& grid, Basis basis) {
  if (basis == Basis::indicator) {
    const Index n = y.size();
    ComplexMatrix out(n, y.level_count());
    for (Index i = 0; i < n; ++i) out.re(i, y.code(i)) = 1.0;
    return out;
  }
  if (basis == Basis::identity) throw Error(ErrorCode::invalid_config, "identity basis is not defined for discrete mode");
  return phi_matrix(y.values, grid, basis);
}

inline CategoricalTable tabulate(const Dataset& data, const TGrid& t_grid, Basis basis) {
  data.validate();
  for (const Column* c : {&data.x, &data.w, &data.y}) {
    if (!c->is_categorical()) throw Error(ErrorCode::invalid_config, "discrete mode needs categorical column " + c->name);
  }
  const Index n = data.size();
  if (n < 1) throw Error(ErrorCode::insufficient_data, "empty sample");
  const int nx = data.x.level_count();
  const int nw = data.w.level_count();

  CategoricalTable t;
  t.x_levels = data.x.levels;
  t.w_levels = data.w.levels;
  t.n = n;
  t.phi = categorical_phi(data.y, t_grid, basis);
  const Index k = t.phi.cols();

  RealVector counts = RealVector::Zero(nx);
  t.Q_hat = RealMatrix::Zero(nx, nw);
  t.q_hat = ComplexMatrix(nx, k);
  t.x_code.resize(static_cast<std::size_t>(n));
  t.w_code.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const int x = data.x.code(i);
    const int w = data.w.code(i);
    t.x_code[static_cast<std::size_t>(i)] = x;
    t.w_code[static_cast<std::size_t>(i)] = w;
    counts(x) += 1.0;
    t.Q_hat(x, w) += 1.0;
    t.q_hat.re.row(x) += t.phi.re.row(i);
    t.q_hat.im.row(x) += t.phi.im.row(i);
  }
  for (int x = 0; x < nx; ++x) {
    if (counts(x) == 0.0) {
      throw Error(ErrorCode::insufficient_data, "level '" + t.x_levels[static_cast<std::size_t>(x)] + "' of " +
                                                    data.x.name + " has no observations");
    }
    t.Q_hat.row(x) /= counts(x);
    t.q_hat.re.row(x) /= counts(x);
    t.q_hat.im.row(x) /= counts(x);
  }
  t.d_hat = counts / static_cast<double>(n);
  return t;
}

struct DiscreteBridge {
  ComplexMatrix H_t;  // |W| x K
};

inline DiscreteBridge ols_bridge(const CategoricalTable& table) {
  const RealMatrix& q = table.Q_hat;
  Eigen::JacobiSVD<RealMatrix> svd(q, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVector sv = svd.singularValues();
  const double top = sv.size() ? sv(0) : 0.0;
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) >= 1e-10 * top && sv(i) > 0.0) ++rank;
  }
  if (q.rows() < q.cols() || rank < q.cols()) {
    throw RankDeficientError("conditional frequency matrix lacks full column rank", static_cast<long>(rank));
  }
  DiscreteBridge b;
  b.H_t = ComplexMatrix(svd.solve(table.q_hat.re), svd.solve(table.q_hat.im));
  const double scale = 1.0 + std::max(table.q_hat.re.cwiseAbs().maxCoeff(), table.q_hat.im.cwiseAbs().maxCoeff());
  const double normal_re = (q.transpose() * (table.q_hat.re - q * b.H_t.re)).cwiseAbs().maxCoeff();
  const double normal_im = (q.transpose() * (table.q_hat.im - q * b.H_t.im)).cwiseAbs().maxCoeff();
  if (!(std::max(normal_re, normal_im) <= 1e-10 * scale)) {
    throw Error(ErrorCode::estimation_failure, "normal-equation residual exceeds 1e-10");
  }
  return b;
}

/// (I - P) q_t per column, P the orthogonal projector onto range(Q_hat).
inline ComplexMatrix projected_residual(const CategoricalTable& table, const DiscreteBridge& bridge) {
  if (bridge.H_t.rows() != table.w_count() || bridge.H_t.cols() != table.columns()) {
    throw Error(ErrorCode::invalid_input, "bridge does not match the table");
  }
  return {table.q_hat.re - table.Q_hat * bridge.H_t.re, table.q_hat.im - table.Q_hat * bridge.H_t.im};
}

/// Orthogonal projection of columns onto the complement of range(Q), via a thin QR of Q.
class ComplementProjector {
 public:
  explicit ComplementProjector(const RealMatrix& q) {
    Eigen::HouseholderQR<RealMatrix> qr(q);
    basis_ = qr.householderQ() * RealMatrix::Identity(q.rows(), q.cols());
  }

  RealMatrix apply(const RealMatrix& v) const { return v - basis_ * (basis_.transpose() * v); }

 private:
  RealMatrix basis_;
};

/// Per-sample U_i(t) = phi(y_i, t) - H_t(w_i).
inline ComplexMatrix discrete_residual_field(const CategoricalTable& table, const DiscreteBridge& bridge) {
  const Index n = static_cast<Index>(table.x_code.size());
  if (table.phi.rows() != n) throw Error(ErrorCode::invalid_input, "table has no per-sample data");
  ComplexMatrix u = table.phi;
  for (Index i = 0; i < n; ++i) {
    const int w = table.w_code[static_cast<std::size_t>(i)];
    u.re.row(i) -= bridge.H_t.re.row(w);
    u.im.row(i) -= bridge.H_t.im.row(w);
  }
  return u;
}

/// Sum over samples of values[i] into row x_code[i].
inline RealMatrix sum_by_level(const std::vector<int>& x_code, Index levels, const RealMatrix& values) {
  RealMatrix out = RealMatrix::Zero(levels, values.cols());
  for (std::size_t i = 0; i < x_code.size(); ++i) out.row(x_code[i]) += values.row(static_cast<Index>(i));
  return out;
}

}  // namespace pmcr
