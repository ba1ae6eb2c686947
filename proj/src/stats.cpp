// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#include "covlim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <json.hpp>

#include "covlim/error.hpp"
#include "covlim/path_ensemble.hpp"

namespace covlim {

namespace {

std::vector<double> sorted_copy(const SampleSet& s) {
  std::vector<double> v = s.values;
  std::sort(v.begin(), v.end());
  return v;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> grid(count);
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) grid[i] = lo + step * static_cast<double>(i);
  grid.back() = hi;
  return grid;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  return s;
}

// Gaussian kernel sum over sorted samples, skipping samples beyond 9h.
std::vector<double> evaluate_kde(const std::vector<double>& sorted, double h, const std::vector<double>& grid) {
  const double norm = 1.0 / (static_cast<double>(sorted.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  const double cutoff = 9.0 * h;
  std::vector<double> density(grid.size(), 0.0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double x = grid[g];
    auto lo = std::lower_bound(sorted.begin(), sorted.end(), x - cutoff);
    auto hi = std::upper_bound(lo, sorted.end(), x + cutoff);
    double s = 0.0;
    for (auto it = lo; it != hi; ++it) {
      const double u = (x - *it) / h;
      s += std::exp(-0.5 * u * u);
    }
    density[g] = s * norm;
  }
  const double mass = trapezoid(grid, density);
  if (mass > 0.0) {
    for (auto& d : density) d /= mass;
  }
  return density;
}

double silverman_sorted(const std::vector<double>& sorted) {
  if (sorted.size() < 2) {
    throw Error(ErrorKind::DegenerateSample, "stats", "kde", "at least two samples are required");
  }
  const double sd = sample_sd(sorted, mean_of(sorted));
  if (!(sd > 0.0)) throw Error(ErrorKind::DegenerateSample, "stats", "kde", "samples have zero variance");
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(static_cast<double>(sorted.size()), -0.2);
}

}  // namespace

void SampleSet::validate() const {
  if (values.empty()) throw Error(ErrorKind::DegenerateSample, "stats", "SampleSet", "sample set '" + label + "' is empty");
  for (double x : values) {
    if (!std::isfinite(x)) {
      throw Error(ErrorKind::DegenerateSample, "stats", "SampleSet", "sample set '" + label + "' has a non-finite value");
    }
  }
}

double silverman_bandwidth(const SampleSet& samples) {
  samples.validate();
  return silverman_sorted(sorted_copy(samples));
}

DensityCurve kde(const SampleSet& samples, std::optional<double> bandwidth, std::size_t grid_points) {
  samples.validate();
  if (grid_points < 2) throw Error(ErrorKind::InvalidArgument, "stats", "kde", "grid needs at least two points");
  const std::vector<double> sorted = sorted_copy(samples);
  const double auto_h = silverman_sorted(sorted);
  const double h = bandwidth.value_or(auto_h);
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorKind::InvalidArgument, "stats", "kde", "bandwidth must be positive");
  DensityCurve curve;
  curve.bandwidth = h;
  curve.grid = linspace(sorted.front() - 3.0 * h, sorted.back() + 3.0 * h, grid_points);
  curve.density = evaluate_kde(sorted, h, curve.grid);
  return curve;
}

DensityCurve kde_on_grid(const SampleSet& samples, double bandwidth, const std::vector<double>& grid) {
  samples.validate();
  if (grid.size() < 2) throw Error(ErrorKind::InvalidArgument, "stats", "kde_on_grid", "grid needs at least two points");
  if (!(bandwidth > 0.0)) throw Error(ErrorKind::InvalidArgument, "stats", "kde_on_grid", "bandwidth must be positive");
  DensityCurve curve;
  curve.bandwidth = bandwidth;
  curve.grid = grid;
  curve.density = evaluate_kde(sorted_copy(samples), bandwidth, grid);
  return curve;
}

double ks_distance(const SampleSet& a, const SampleSet& b) {
  a.validate();
  b.validate();
  const std::vector<double> x = sorted_copy(a);
  const std::vector<double> y = sorted_copy(b);
  const double na = static_cast<double>(x.size());
  const double nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double worst = 0.0;
  while (i < x.size() && j < y.size()) {
    // Advance past every copy of the smaller value in both sets so ties
    // are compared after the jump.
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    worst = std::max(worst, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return std::min(worst, 1.0);
}

double quantile_sorted(const std::vector<double>& sorted, double prob) {
  if (sorted.empty()) throw Error(ErrorKind::DegenerateSample, "stats", "quantile", "empty sample");
  const double pos = prob * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double Summary::standard_error() const { return count > 0 ? std::sqrt(variance / static_cast<double>(count)) : 0.0; }

Summary summarize(const SampleSet& a) {
  a.validate();
  const std::vector<double> sorted = sorted_copy(a);
  Summary s;
  s.count = sorted.size();
  s.mean = mean_of(sorted);
  const double n = static_cast<double>(s.count);
  double m2 = 0.0, m3 = 0.0;
  for (double x : sorted) {
    const double d = x - s.mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  if (s.count > 1) s.variance = m2 / (n - 1.0);
  if (s.count > 2 && m2 > 0.0) {
    const double g1 = (m3 / n) / std::pow(m2 / n, 1.5);
    s.skewness = std::sqrt(n * (n - 1.0)) / (n - 2.0) * g1;
  }
  s.q05 = quantile_sorted(sorted, 0.05);
  s.q25 = quantile_sorted(sorted, 0.25);
  s.q50 = quantile_sorted(sorted, 0.50);
  s.q75 = quantile_sorted(sorted, 0.75);
  s.q95 = quantile_sorted(sorted, 0.95);
  return s;
}

ComparisonReport compare_samples(const SampleSet& a, const SampleSet& b, std::size_t grid_points) {
  a.validate();
  b.validate();
  if (grid_points < 2) throw Error(ErrorKind::InvalidArgument, "stats", "compare", "grid needs at least two points");
  const std::vector<double> xa = sorted_copy(a);
  const std::vector<double> xb = sorted_copy(b);
  ComparisonReport r;
  r.label_a = a.label;
  r.label_b = b.label;
  r.config_hash = a.config_hash;
  r.ks = ks_distance(a, b);
  r.summary_a = summarize(a);
  r.summary_b = summarize(b);
  r.bandwidth_a = silverman_sorted(xa);
  r.bandwidth_b = silverman_sorted(xb);
  const double lo = std::min(xa.front() - 3.0 * r.bandwidth_a, xb.front() - 3.0 * r.bandwidth_b);
  const double hi = std::max(xa.back() + 3.0 * r.bandwidth_a, xb.back() + 3.0 * r.bandwidth_b);
  r.grid = linspace(lo, hi, grid_points);
  r.density_a = evaluate_kde(xa, r.bandwidth_a, r.grid);
  r.density_b = evaluate_kde(xb, r.bandwidth_b, r.grid);
  return r;
}

namespace {

nlohmann::ordered_json summary_json(const Summary& s) {
  nlohmann::ordered_json j;
  j["count"] = s.count;
  j["mean"] = s.mean;
  j["variance"] = s.variance;
  j["skewness"] = s.skewness;
  j["quantiles"] = {{"q05", s.q05}, {"q25", s.q25}, {"q50", s.q50}, {"q75", s.q75}, {"q95", s.q95}};
  return j;
}

}  // namespace

std::string to_json(const ComparisonReport& report) {
  nlohmann::ordered_json j;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(report.config_hash));
  j["config_hash"] = hash;
  j["ks"] = report.ks;
  j["a"] = {{"label", report.label_a}, {"bandwidth", report.bandwidth_a}, {"summary", summary_json(report.summary_a)}};
  j["b"] = {{"label", report.label_b}, {"bandwidth", report.bandwidth_b}, {"summary", summary_json(report.summary_b)}};
  j["kde"] = {{"grid", report.grid}, {"density_a", report.density_a}, {"density_b", report.density_b}};
  return j.dump(2) + "\n";
}

void write_kde_csv(const ComparisonReport& report, std::ostream& out) {
  out << "x,density_a,density_b\n";
  for (std::size_t i = 0; i < report.grid.size(); ++i) {
    out << format_double(report.grid[i]) << ',' << format_double(report.density_a[i]) << ','
        << format_double(report.density_b[i]) << '\n';
  }
}

}  // namespace covlim
