// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#include "covlim/gaussian_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "covlim/error.hpp"
#include "covlim/quadrature.hpp"
#include "covlim/rng.hpp"

namespace covlim {

using std::numbers::pi;

ShapingConfig ShapingConfig::unshaped() {
  ShapingConfig s;
  s.kind = ShapingKind::Unshaped;
  s.p = 0.0;
  return s;
}

ShapingConfig ShapingConfig::relu_like(double c_plus, double c_minus, double p, std::size_t n_ref) {
  ShapingConfig s;
  s.kind = ShapingKind::ReluLike;
  s.c_plus = c_plus;
  s.c_minus = c_minus;
  s.p = p;
  s.n_ref = n_ref;
  return s;
}

ShapingConfig ShapingConfig::smooth(SmoothBase base, double a, double p, std::size_t n_ref) {
  ShapingConfig s;
  s.kind = ShapingKind::Smooth;
  s.base = base;
  s.a = a;
  s.p = p;
  s.n_ref = n_ref;
  switch (base) {
    case SmoothBase::Tanh: s.phi2_0 = 0.0; s.phi3_0 = -2.0; break;
    case SmoothBase::Sin: s.phi2_0 = 0.0; s.phi3_0 = -1.0; break;
    case SmoothBase::Softplus: s.phi2_0 = 0.5; s.phi3_0 = 0.0; break;
  }
  return s;
}

ShapingConfig ShapingConfig::with_width(std::size_t n) const {
  ShapingConfig s = *this;
  if (s.n_ref == 0) s.n_ref = n;
  return s;
}

namespace {
double width_power(std::size_t n_ref, double p, const char* op) {
  if (n_ref == 0) {
    throw Error(ErrorKind::Domain, "gaussian_kernels", op, "ShapingConfig.n_ref is unresolved (0)");
  }
  return std::pow(static_cast<double>(n_ref), p);
}
}  // namespace

double ShapingConfig::s_plus() const {
  if (kind == ShapingKind::Unshaped) return 1.0;
  return 1.0 + c_plus / width_power(n_ref, p, "s_plus");
}

double ShapingConfig::s_minus() const {
  if (kind == ShapingKind::Unshaped) return 0.0;
  return 1.0 + c_minus / width_power(n_ref, p, "s_minus");
}

double ShapingConfig::smooth_scale() const { return a * width_power(n_ref, p, "smooth_scale"); }

void ShapingConfig::validate() const {
  if (!(p >= 0.0) || !std::isfinite(p)) {
    throw Error(ErrorKind::Domain, "gaussian_kernels", "ShapingConfig", "ShapingConfig.p must be >= 0");
  }
  if (kind == ShapingKind::Smooth && (a == 0.0 || !std::isfinite(a))) {
    throw Error(ErrorKind::Domain, "gaussian_kernels", "ShapingConfig", "ShapingConfig.a must be nonzero");
  }
  if (!std::isfinite(c_plus) || !std::isfinite(c_minus)) {
    throw Error(ErrorKind::Domain, "gaussian_kernels", "ShapingConfig", "ShapingConfig.c_plus/c_minus must be finite");
  }
}

std::string_view to_string(ShapingKind kind) {
  switch (kind) {
    case ShapingKind::ReluLike: return "relu_like";
    case ShapingKind::Smooth: return "smooth";
    case ShapingKind::Unshaped: return "unshaped";
  }
  return "unknown";
}

std::string_view to_string(SmoothBase base) {
  switch (base) {
    case SmoothBase::Tanh: return "tanh";
    case SmoothBase::Sin: return "sin";
    case SmoothBase::Softplus: return "softplus";
  }
  return "unknown";
}

ShapedActivation::ShapedActivation(const ShapingConfig& shaping) : kind_(shaping.kind), base_(shaping.base) {
  shaping.validate();
  if (kind_ == ShapingKind::Smooth) {
    scale_ = shaping.smooth_scale();
  } else {
    s_plus_ = shaping.s_plus();
    s_minus_ = shaping.s_minus();
  }
}

double ShapedActivation::operator()(double x) const {
  if (kind_ != ShapingKind::Smooth) return x > 0.0 ? s_plus_ * x : s_minus_ * x;
  const double u = x / scale_;
  switch (base_) {
    case SmoothBase::Tanh: return scale_ * std::tanh(u);
    case SmoothBase::Sin: return scale_ * std::sin(u);
    case SmoothBase::Softplus: {
      // 2 (log(1 + e^u) - log 2), written to stay finite for large |u|
      const double softplus = std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u)));
      return scale_ * 2.0 * (softplus - std::numbers::ln2);
    }
  }
  return 0.0;
}

namespace kernels {

double clamp_correlation(double rho, std::string_view op) {
  if (std::isnan(rho) || std::abs(rho) > 1.0 + kCorrelationSlack) {
    throw Error(ErrorKind::Domain, "gaussian_kernels", std::string(op),
                "correlation " + std::to_string(rho) + " outside [-1, 1]");
  }
  return std::clamp(rho, -1.0, 1.0);
}

namespace {
// sqrt(1 - rho^2) without cancellation near |rho| = 1
double complement(double rho) { return std::sqrt(std::max(0.0, (1.0 - rho) * (1.0 + rho))); }
}  // namespace

double kernel_k(int p, int r, double rho) {
  rho = clamp_correlation(rho, "kernel_K");
  const double q = complement(rho);
  const double theta = std::acos(-rho);
  if (p == 0 && r == 0) return theta / (2.0 * pi);
  if (p == 1 && r == 1) return (q + rho * theta) / (2.0 * pi);
  if (p == 2 && r == 2) return (3.0 * rho * q + theta * (1.0 + 2.0 * rho * rho)) / (2.0 * pi);
  if (p == 3 && r == 1) return (q * (2.0 + rho * rho) + 3.0 * theta * rho) / (2.0 * pi);
  throw Error(ErrorKind::UnsupportedKernel, "gaussian_kernels", "kernel_K",
              "no closed form for (p, r) = (" + std::to_string(p) + ", " + std::to_string(r) + ")");
}

namespace {

double relu_pow(double x, int k) {
  if (x <= 0.0) return 0.0;
  return k == 0 ? 1.0 : std::pow(x, k);
}

double polar_quadrature(int p, int r, double rho, std::size_t nodes) {
  // E R^k for R^2 ~ chi^2_2: substitute s = R^2 / 2, weight e^{-s}.
  const int k = p + r;
  double radial = 0.0;
  const auto& lag = quadrature::laguerre(nodes);
  for (std::size_t i = 0; i < nodes; ++i) radial += lag.weights[i] * std::pow(2.0 * lag.nodes[i], 0.5 * k);

  // Angle theta is uniform; g = R cos(theta), g_hat = R cos(theta - theta0)
  // with theta0 = arccos(rho). Both are positive on (theta0 - pi/2, pi/2).
  const double theta0 = std::acos(rho);
  const double lo = theta0 - pi / 2.0;
  const double hi = pi / 2.0;
  if (hi <= lo) return 0.0;
  const double mid = 0.5 * (hi + lo);
  const double half = 0.5 * (hi - lo);
  const auto& leg = quadrature::legendre(nodes);
  double angular = 0.0;
  for (std::size_t i = 0; i < nodes; ++i) {
    const double theta = mid + half * leg.nodes[i];
    angular += leg.weights[i] * relu_pow(std::cos(theta), p) * relu_pow(std::cos(theta - theta0), r);
  }
  angular *= half / (2.0 * pi);
  return radial * angular;
}

}  // namespace

OracleEstimate kernel_oracle(int p, int r, double rho, std::size_t budget, OracleMethod method, std::uint64_t seed) {
  rho = clamp_correlation(rho, "kernel_oracle");
  if (p < 0 || r < 0) {
    throw Error(ErrorKind::Domain, "gaussian_kernels", "kernel_oracle", "powers must be nonnegative");
  }
  if (budget == 0) {
    throw Error(ErrorKind::InvalidArgument, "gaussian_kernels", "kernel_oracle", "budget must be positive");
  }
  if (method == OracleMethod::Quadrature) {
    const double fine = polar_quadrature(p, r, rho, budget);
    const double coarse = polar_quadrature(p, r, rho, std::max<std::size_t>(1, budget / 2));
    return {fine, std::abs(fine - coarse)};
  }
  Rng rng(seed, stream_id(stream_purpose::kOracle, 0));
  const double q = complement(rho);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < budget; ++i) {
    const double g = rng.normal();
    const double w = rng.normal();
    const double x = relu_pow(g, p) * relu_pow(rho * g + q * w, r);
    sum += x;
    sum2 += x * x;
  }
  const double n = static_cast<double>(budget);
  const double mean = sum / n;
  const double var = budget > 1 ? std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0)) : 0.0;
  return {mean, std::sqrt(var / n)};
}

double nu(double rho, double c_plus, double c_minus) {
  rho = clamp_correlation(rho, "nu");
  const double gap = c_plus - c_minus;
  return gap * gap / (2.0 * pi) * (complement(rho) - rho * std::acos(rho));
}

double f_resnet(double rho) {
  rho = clamp_correlation(rho, "f_resnet");
  return (rho * std::asin(rho) + complement(rho)) / pi + 0.5 * rho;
}

double shaped_relu_k1(double rho, double s_plus, double s_minus) {
  // phi_s(x) = s+ relu(x) - s- relu(-x); the cross terms pair g with -g_hat.
  return (s_plus * s_plus + s_minus * s_minus) * kernel_k(1, 1, rho) - 2.0 * s_plus * s_minus * kernel_k(1, 1, -rho);
}

double he_normalizer(const ShapingConfig& shaping) {
  shaping.validate();
  double second_moment = 0.0;
  if (shaping.kind == ShapingKind::Smooth) {
    const ShapedActivation phi(shaping);
    const auto& rule = quadrature::hermite(128);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double y = phi(rule.nodes[i]);
      second_moment += rule.weights[i] * y * y;
    }
  } else {
    const double sp = shaping.s_plus();
    const double sm = shaping.s_minus();
    second_moment = 0.5 * (sp * sp + sm * sm);
  }
  if (!(second_moment > 0.0)) {
    throw Error(ErrorKind::DegenerateActivation, "gaussian_kernels", "he_normalizer", "E phi_s(g)^2 is zero");
  }
  return 1.0 / second_moment;
}

double smooth_drift(double v_aa, double v_ab, double v_bb, const ShapingConfig& shaping) {
  if (shaping.kind != ShapingKind::Smooth) {
    throw Error(ErrorKind::InvalidArgument, "gaussian_kernels", "smooth_drift", "shaping is not smooth");
  }
  if (shaping.a == 0.0) throw Error(ErrorKind::Domain, "gaussian_kernels", "smooth_drift", "a must be nonzero");
  const double a2 = shaping.a * shaping.a;
  return shaping.phi2_0 * shaping.phi2_0 / (4.0 * a2) * (v_aa * v_bb + v_ab * (2.0 * v_ab - 3.0)) +
         shaping.phi3_0 / (2.0 * a2) * v_ab * (v_aa + v_bb - 2.0);
}

DriftDiffusionCoeffs mu_sigma_correlation(double rho, double c) {
  rho = clamp_correlation(rho, "mu_sigma_correlation");
  const double k1 = kernel_k(1, 1, rho);
  const double k2 = kernel_k(2, 2, rho);
  const double k31 = kernel_k(3, 1, rho);
  DriftDiffusionCoeffs out;
  out.mu_r = c / 4.0 * (k1 * (c * c * k2 + 3.0 * kM2 + 3.0) - 4.0 * c * k31);
  out.sigma_r2 = c * c / 2.0 * (k1 * k1 * (c * c * k2 + kM2 + 1.0) - 4.0 * c * k1 * k31 + 2.0 * k2);
  // Rounding can leave a tiny negative value where the bracket cancels (rho -> 1).
  if (out.sigma_r2 < 0.0 && out.sigma_r2 > -1e-12) out.sigma_r2 = 0.0;
  return out;
}

ExpandedUpdate expanded_correlation_update(double rho, double n) {
  rho = clamp_correlation(rho, "expanded_correlation_update");
  if (!(n >= 1.0)) {
    throw Error(ErrorKind::Domain, "gaussian_kernels", "expanded_correlation_update", "n must be >= 1");
  }
  const double e = 1.0 - rho;
  const double e32 = e * std::sqrt(e);
  const double e52 = e * e32;
  const double sqrt2 = std::numbers::sqrt2;
  const double inv_n = std::isinf(n) ? 0.0 : 1.0 / n;

  ExpandedUpdate out;
  out.deterministic = rho + 2.0 * sqrt2 / (3.0 * pi) * e32 + sqrt2 / (30.0 * pi) * e52 +
                      inv_n * (-2.0 * e + 4.0 * sqrt2 / pi * e32 + 3.0 * e * e - 73.0 * sqrt2 / (15.0 * pi) * e52);
  out.noise = std::sqrt(inv_n) * (2.0 * sqrt2 * e - 56.0 / (15.0 * pi) * e32);
  out.remainder = e * e52 + e * e * e * inv_n;
  return out;
}

}  // namespace kernels
}  // namespace covlim
