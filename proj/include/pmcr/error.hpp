#pragma once

#include <stdexcept>
#include <string>

namespace pmcr {

enum class ErrorCode {
  invalid_input,
  invalid_config,
  degenerate_bandwidth,
  ill_conditioned,
  estimation_failure,
  insufficient_data,
  rank_deficient,
  no_solution,
  undefined_solution,
  io_error,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input: return "invalid-input";
    case ErrorCode::invalid_config: return "invalid-config";
    case ErrorCode::degenerate_bandwidth: return "degenerate-bandwidth";
    case ErrorCode::ill_conditioned: return "ill-conditioned";
    case ErrorCode::estimation_failure: return "estimation-failure";
    case ErrorCode::insufficient_data: return "insufficient-data";
    case ErrorCode::rank_deficient: return "rank-deficient";
    case ErrorCode::no_solution: return "no-solution";
    case ErrorCode::undefined_solution: return "undefined-solution";
    case ErrorCode::io_error: return "io-error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class IllConditionedError : public Error {
 public:
  IllConditionedError(const std::string& what, double condition_estimate)
      : Error(ErrorCode::ill_conditioned,
              what + " (condition estimate " + std::to_string(condition_estimate) + ")"),
        condition_estimate_(condition_estimate) {}

  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

class RankDeficientError : public Error {
 public:
  RankDeficientError(const std::string& what, long numerical_rank)
      : Error(ErrorCode::rank_deficient,
              what + " (numerical rank " + std::to_string(numerical_rank) + ")"),
        numerical_rank_(numerical_rank) {}

  long numerical_rank() const noexcept { return numerical_rank_; }

 private:
  long numerical_rank_;
};

}  // namespace pmcr
