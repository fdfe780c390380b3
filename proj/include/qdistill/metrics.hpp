/**
 * metrics.hpp: correlation and residual statistics for quality predictions.
 */
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qdistill {

struct ResidualStats {
  double mean_residual = 0.0;
  double mae = 0.0;
  double rmse = 0.0;
};

struct EvalReport {
  double srcc = 0.0;
  double plcc = 0.0;
  double mean_residual = 0.0;
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t n = 0;

  bool operator==(const EvalReport&) const = default;
};

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

/// Spearman correlation: Pearson over average ranks.
double srcc(std::span<const double> x, std::span<const double> y);

/// Pearson correlation with population-normalized moments.
double plcc(std::span<const double> x, std::span<const double> y);

/// Pearson correlation after mapping `pred` through a fitted four-parameter
/// logistic. Not used by default; offered for comparison with published
/// numbers that apply this remapping.
double plcc_logistic(std::span<const double> pred, std::span<const double> label);

ResidualStats residual_stats(std::span<const double> pred, std::span<const double> label);

EvalReport evaluate(std::span<const double> pred, std::span<const double> label);

}  // namespace qdistill
