#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "pmcr/bridge_continuous.hpp"
#include "pmcr/bridge_discrete.hpp"
#include "pmcr/error.hpp"
#include "pmcr/numerics.hpp"
#include "pmcr/teststats.hpp"

namespace pmcr {

/// Two-point law: 1 - kappa with probability kappa / sqrt(5), kappa otherwise.
struct TwoPointLaw {
  static constexpr double kappa = std::numbers::phi;
  static constexpr double low = 1.0 - kappa;
  static constexpr double high = kappa;
  static constexpr double p_low = kappa / (2.0 * kappa - 1.0);  // 2 kappa - 1 = sqrt(5)

  static double from_uniform(double u) { return u < p_low ? low : high; }
  static double mean() { return low * p_low + high * (1.0 - p_low); }
  static double variance() { return low * low * p_low + high * high * (1.0 - p_low) - mean() * mean(); }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ splitmix64(v)); }

inline double to_unit_interval(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

/// Multiplier for replicate b and sample i, a pure function of (seed, b, i).
inline double counter_multiplier(std::uint64_t seed, std::uint64_t b, std::uint64_t i) {
  return TwoPointLaw::from_uniform(to_unit_interval(hash_combine(hash_combine(splitmix64(seed), b), i)));
}

inline RealVector multiplier_weights(Index n, std::mt19937_64& rng) {
  if (n < 1) throw Error(ErrorCode::invalid_input, "multiplier count must be >= 1");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  RealVector w(n);
  for (Index i = 0; i < n; ++i) w(i) = TwoPointLaw::from_uniform(unif(rng));
  return w;
}

enum class BootstrapScheme {
  refit,     // multiplied residuals pass through the fitted bridge's projection again
  residual,  // multiplied residuals of the original fit, used as is
};

inline const char* to_string(BootstrapScheme s) { return s == BootstrapScheme::refit ? "refit" : "residual"; }

struct BootstrapConfig {
  int replications = 500;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  BootstrapScheme scheme = BootstrapScheme::refit;

  void validate() const {
    if (replications < 1) throw Error(ErrorCode::invalid_config, "bootstrap replications must be >= 1");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorCode::invalid_config, "alpha must lie in (0, 1]");
  }
};

struct BootstrapResult {
  std::vector<double> boot_stats;  // ascending
  double critical_value = 0.0;
  double p_value = 1.0;
};

/// The ceil((1 - alpha) B)-th order statistic; 0 when that rank is 0.
inline double critical_value(const std::vector<double>& sorted, double alpha) {
  if (sorted.empty()) throw Error(ErrorCode::invalid_input, "no bootstrap statistics");
  const double b = static_cast<double>(sorted.size());
  const auto rank = static_cast<std::size_t>(std::ceil((1.0 - alpha) * b - 1e-9));
  if (rank == 0) return 0.0;
  return sorted[std::min(rank, sorted.size()) - 1];
}

inline double p_value(const std::vector<double>& boot_stats, double observed) {
  if (boot_stats.empty()) throw Error(ErrorCode::invalid_input, "no bootstrap statistics");
  const auto exceed = std::count_if(boot_stats.begin(), boot_stats.end(), [&](double v) { return v >= observed; });
  return (1.0 + static_cast<double>(exceed)) / (static_cast<double>(boot_stats.size()) + 1.0);
}

inline BootstrapResult summarize(std::vector<double> stats, double observed, double alpha) {
  std::sort(stats.begin(), stats.end());
  BootstrapResult r;
  r.critical_value = critical_value(stats, alpha);
  r.p_value = p_value(stats, observed);
  r.boot_stats = std::move(stats);
  return r;
}

struct Decision {
  bool reject = false;
  double critical_value = 0.0;
  double p_value = 1.0;
};

inline Decision decide(const StatisticValue& observed, const BootstrapResult& boot) {
  if (boot.boot_stats.empty()) throw Error(ErrorCode::invalid_input, "no bootstrap statistics");
  return {observed.delta >= boot.critical_value, boot.critical_value, p_value(boot.boot_stats, observed.delta)};
}

/// Worker count: explicit value, else PMCR_THREADS, else hardware concurrency.
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PMCR_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

/// Runs fn(j) for j in [0, count) over `threads` workers with a static interleaved partition.
template <class Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), count);
  if (workers <= 1) {
    for (std::size_t j = 0; j < count; ++j) fn(j);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t j = w; j < count; j += workers) fn(j);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

using MultiplierFn = std::function<double(std::uint64_t replicate, Index sample)>;

inline MultiplierFn counter_multipliers(std::uint64_t seed) {
  return [seed](std::uint64_t b, Index i) { return counter_multiplier(seed, b, static_cast<std::uint64_t>(i)); };
}

namespace detail {

inline RealVector draw(const MultiplierFn& fn, std::uint64_t b, Index n) {
  RealVector w(n);
  for (Index i = 0; i < n; ++i) w(i) = fn(b, i);
  return w;
}

}  // namespace detail

/// Bootstrap of the max-over-t statistic for a continuous residual field.
/// With the refit scheme, `smoother` must be the bridge fitted on the same sample.
class ContinuousBootstrap {
 public:
  ContinuousBootstrap(ComplexMatrix residuals, const SIntegrator& rho, const BridgeSmoother* smoother,
                      BootstrapScheme scheme)
      : residuals_(std::move(residuals)), rho_(&rho) {
    if (residuals_.rows() != rho.size()) throw Error(ErrorCode::invalid_input, "residual field and conditioning points differ in length");
    if (scheme == BootstrapScheme::refit) {
      if (!smoother) throw Error(ErrorCode::invalid_config, "refit bootstrap needs the fitted bridge");
      weight_ = rho.factor() - smoother->transpose_apply(rho.factor());
    } else {
      weight_ = rho.factor();
    }
  }

  double replicate(const RealVector& omega) const {
    const RealMatrix re = omega.asDiagonal() * residuals_.re;
    const RealMatrix im = omega.asDiagonal() * residuals_.im;
    return rho_->per_column_projected(weight_.transpose() * re, weight_.transpose() * im).maxCoeff();
  }

  BootstrapResult run(double observed, const BootstrapConfig& cfg, int threads, const MultiplierFn& multipliers) const {
    cfg.validate();
    std::vector<double> stats(static_cast<std::size_t>(cfg.replications));
    const Index n = residuals_.rows();
    parallel_for(stats.size(), threads, [&](std::size_t b) { stats[b] = replicate(detail::draw(multipliers, b, n)); });
    return summarize(std::move(stats), observed, cfg.alpha);
  }

  BootstrapResult run(double observed, const BootstrapConfig& cfg, int threads = 1) const {
    return run(observed, cfg, threads, counter_multipliers(cfg.seed));
  }

 private:
  ComplexMatrix residuals_;
  const SIntegrator* rho_;
  RealMatrix weight_;
};

/// Bootstrap of the weighted discrete statistic from per-sample residuals.
class DiscreteBootstrap {
 public:
  DiscreteBootstrap(const CategoricalTable& table, const DiscreteBridge& bridge, RealVector weights,
                    BootstrapScheme scheme)
      : table_(&table), residuals_(discrete_residual_field(table, bridge)), weights_(std::move(weights)),
        scheme_(scheme), projector_(table.Q_hat) {
    if (weights_.size() != table.columns()) throw Error(ErrorCode::invalid_input, "weights do not match the table");
  }

  /// Unprojected T_n(t) = n^{-1/2} sum_i omega_i U_i(t) e(x_i).
  RealVector per_t(const RealVector& omega) const {
    const auto& t = *table_;
    const double n = static_cast<double>(t.n);
    RealMatrix re = sum_by_level(t.x_code, t.x_count(), omega.asDiagonal() * residuals_.re);
    RealMatrix im = sum_by_level(t.x_code, t.x_count(), omega.asDiagonal() * residuals_.im);
    if (scheme_ == BootstrapScheme::refit) {
      const RealVector counts = t.d_hat * n;
      const RealVector scale = t.d_hat * std::sqrt(n);
      re = scale.asDiagonal() * projector_.apply(counts.cwiseInverse().asDiagonal() * re);
      im = scale.asDiagonal() * projector_.apply(counts.cwiseInverse().asDiagonal() * im);
    } else {
      re /= std::sqrt(n);
      im /= std::sqrt(n);
    }
    return (re.colwise().squaredNorm() + im.colwise().squaredNorm()).transpose();
  }

  double replicate(const RealVector& omega) const { return weighted_statistic(per_t(omega), weights_); }

  BootstrapResult run(double observed, const BootstrapConfig& cfg, int threads, const MultiplierFn& multipliers) const {
    cfg.validate();
    std::vector<double> stats(static_cast<std::size_t>(cfg.replications));
    const Index n = residuals_.rows();
    parallel_for(stats.size(), threads, [&](std::size_t b) { stats[b] = replicate(detail::draw(multipliers, b, n)); });
    return summarize(std::move(stats), observed, cfg.alpha);
  }

  BootstrapResult run(double observed, const BootstrapConfig& cfg, int threads = 1) const {
    return run(observed, cfg, threads, counter_multipliers(cfg.seed));
  }

 private:
  const CategoricalTable* table_;
  ComplexMatrix residuals_;
  RealVector weights_;
  BootstrapScheme scheme_;
  ComplementProjector projector_;
};

}  // namespace pmcr
