#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "pmcr/error.hpp"
#include "pmcr/numerics.hpp"

namespace pmcr {

enum class VariableKind { continuous, categorical };

/// One observed variable. Categorical columns store level indices (0, 1, ...) in `values`
/// and the labels of the declared or inferred support in `levels`.
struct Column {
  std::string name;
  VariableKind kind = VariableKind::continuous;
  RealVector values;
  std::vector<std::string> levels;

  static Column continuous(std::string name, RealVector values) {
    return Column{std::move(name), VariableKind::continuous, std::move(values), {}};
  }

  static Column categorical(std::string name, const std::vector<int>& codes, std::vector<std::string> levels) {
    Column c{std::move(name), VariableKind::categorical, RealVector(static_cast<Index>(codes.size())),
             std::move(levels)};
    for (std::size_t i = 0; i < codes.size(); ++i) {
      if (codes[i] < 0 || static_cast<std::size_t>(codes[i]) >= c.levels.size()) {
        throw Error(ErrorCode::invalid_input, "categorical code out of range in column " + c.name);
      }
      c.values(static_cast<Index>(i)) = codes[i];
    }
    return c;
  }

  /// Labels mapped to codes by first appearance.
  static Column categorical_from_labels(std::string name, const std::vector<std::string>& labels) {
    std::vector<std::string> levels;
    std::vector<int> codes;
    codes.reserve(labels.size());
    for (const auto& label : labels) {
      auto it = std::find(levels.begin(), levels.end(), label);
      if (it == levels.end()) {
        levels.push_back(label);
        codes.push_back(static_cast<int>(levels.size() - 1));
      } else {
        codes.push_back(static_cast<int>(it - levels.begin()));
      }
    }
    return categorical(std::move(name), codes, std::move(levels));
  }

  Index size() const { return values.size(); }
  bool is_categorical() const { return kind == VariableKind::categorical; }
  int level_count() const { return static_cast<int>(levels.size()); }
  int code(Index i) const { return static_cast<int>(values(i)); }
};

struct Dataset {
  Column x;
  Column y;
  Column w;
  std::optional<Column> z;
  std::vector<Column> covariates;

  Index size() const { return x.size(); }

  void validate() const {
    const Index n = x.size();
    auto check = [n](const Column& c) {
      if (c.size() != n) throw Error(ErrorCode::invalid_input, "column " + c.name + " has a different length");
      if (!c.values.allFinite()) throw Error(ErrorCode::invalid_input, "column " + c.name + " has non-finite values");
    };
    check(y);
    check(w);
    if (z) check(*z);
    for (const auto& c : covariates) check(c);
  }
};

/// Z-score with the population standard deviation.
inline RealVector standardize(const RealVector& v) {
  if (v.size() < 2) throw Error(ErrorCode::insufficient_data, "standardization needs at least two values");
  const double mean = v.mean();
  const double sd = std::sqrt((v.array() - mean).square().mean());
  if (!(sd > 0.0)) throw Error(ErrorCode::degenerate_bandwidth, "column has zero variance");
  return (v.array() - mean) / sd;
}

/// Stacks column vectors into an n x d point matrix.
inline RealMatrix stack_columns(const std::vector<RealVector>& cols) {
  if (cols.empty()) return {};
  RealMatrix m(cols.front().size(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j].size() != m.rows()) throw Error(ErrorCode::invalid_input, "stacked columns differ in length");
    m.col(static_cast<Index>(j)) = cols[j];
  }
  return m;
}

}  // namespace pmcr
