// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace covlim {

struct SampleSet {
  std::vector<double> values;
  std::string label;
  std::string source;
  std::uint64_t config_hash = 0;

  /// Throws DegenerateSample when empty or when a value is not finite.
  void validate() const;
};

struct DensityCurve {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
};

inline constexpr std::size_t kKdeGridPoints = 512;

/// Silverman's rule 0.9 min(sd, IQR/1.34) N^{-1/5}; falls back to sd when the
/// IQR is zero. Throws DegenerateSample for fewer than two samples or zero
/// variance.
double silverman_bandwidth(const SampleSet& samples);

/// Gaussian KDE on an equispaced grid over [min - 3h, max + 3h], rescaled so
/// that the trapezoid integral over the grid is exactly 1.
DensityCurve kde(const SampleSet& samples, std::optional<double> bandwidth = std::nullopt,
                 std::size_t grid_points = kKdeGridPoints);

/// Same estimator evaluated on a caller-supplied equispaced grid.
DensityCurve kde_on_grid(const SampleSet& samples, double bandwidth, const std::vector<double>& grid);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_distance(const SampleSet& a, const SampleSet& b);

/// Largest gap between the empirical CDF of `a` and a reference CDF.
template <class Cdf>
double ks_against(const SampleSet& a, Cdf&& cdf);

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased, 0 for a single sample
  double skewness = 0.0;  // adjusted Fisher-Pearson, 0 when undefined
  double q05 = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, q95 = 0.0;

  double standard_error() const;
};

/// Linear-interpolation quantile of sorted data (type 7).
double quantile_sorted(const std::vector<double>& sorted, double prob);

Summary summarize(const SampleSet& a);

struct ComparisonReport {
  std::string label_a;
  std::string label_b;
  double ks = 0.0;
  Summary summary_a;
  Summary summary_b;
  std::vector<double> grid;
  std::vector<double> density_a;
  std::vector<double> density_b;
  double bandwidth_a = 0.0;
  double bandwidth_b = 0.0;
  std::uint64_t config_hash = 0;
};

/// KS, moments and both KDEs on a grid spanning the union of the two
/// individual KDE supports.
ComparisonReport compare_samples(const SampleSet& a, const SampleSet& b, std::size_t grid_points = kKdeGridPoints);

std::string to_json(const ComparisonReport& report);
void write_kde_csv(const ComparisonReport& report, std::ostream& out);

// ---------------------------------------------------------------------------

template <class Cdf>
double ks_against(const SampleSet& a, Cdf&& cdf) {
  a.validate();
  std::vector<double> sorted = a.values;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    worst = std::max({worst, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return worst;
}

}  // namespace covlim
