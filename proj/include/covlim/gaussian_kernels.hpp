// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace covlim {

enum class ShapingKind { ReluLike, Smooth, Unshaped };

/// Base nonlinearity for smooth shaping phi_s(x) = s * phi(x / s). All satisfy
/// phi(0) = 0 and phi'(0) = 1.
///   Tanh:     phi''(0) = 0,   phi'''(0) = -2
///   Sin:      phi''(0) = 0,   phi'''(0) = -1
///   Softplus: 2 (softplus(x) - log 2), phi''(0) = 1/2, phi'''(0) = 0
enum class SmoothBase { Tanh, Sin, Softplus };

/// Activation shaping. ReLU-like: phi_s(x) = s+ max(x,0) + s- min(x,0) with
/// s+- = 1 + c+- / n^p. Smooth: phi_s(x) = s phi(x/s) with s = a n^p.
struct ShapingConfig {
  ShapingKind kind = ShapingKind::Unshaped;
  double c_plus = 0.0;
  double c_minus = 0.0;
  double p = 0.5;
  double a = 1.0;
  double phi2_0 = 0.0;
  double phi3_0 = -2.0;
  SmoothBase base = SmoothBase::Tanh;
  /// Width n entering the shaping; 0 means "inherit the network width".
  std::size_t n_ref = 0;

  static ShapingConfig unshaped();
  static ShapingConfig relu_like(double c_plus, double c_minus, double p, std::size_t n_ref = 0);
  /// Fills phi''(0) and phi'''(0) from the base function.
  static ShapingConfig smooth(SmoothBase base, double a, double p, std::size_t n_ref = 0);

  ShapingConfig with_width(std::size_t n) const;

  double s_plus() const;
  double s_minus() const;
  double smooth_scale() const;

  /// Throws ErrorKind::Domain when an invariant is violated.
  void validate() const;
};

std::string_view to_string(ShapingKind kind);
std::string_view to_string(SmoothBase base);

/// phi_s evaluated pointwise, with the shaping constants precomputed.
class ShapedActivation {
 public:
  explicit ShapedActivation(const ShapingConfig& shaping);
  double operator()(double x) const;

 private:
  ShapingKind kind_;
  SmoothBase base_;
  double s_plus_ = 1.0;
  double s_minus_ = 0.0;
  double scale_ = 1.0;
};

namespace kernels {

/// E[2 phi(g)^2 - 1]^2 for the unshaped ReLU.
inline constexpr double kM2 = 5.0;

/// Tolerance for pulling a correlation that drifted past +-1 back in.
inline constexpr double kCorrelationSlack = 1e-12;

/// Clamps rho into [-1, 1]; |rho| > 1 + kCorrelationSlack (or NaN) is a
/// domain error attributed to `op`.
double clamp_correlation(double rho, std::string_view op);

/// Arccosine kernels K_{p,r}(rho) = E phi(g)^p phi(rho g + sqrt(1-rho^2) w)^r
/// for phi = ReLU and independent standard g, w. phi^0 is the indicator of a
/// positive argument. Supported (p, r): (0,0), (1,1), (2,2), (3,1).
double kernel_k(int p, int r, double rho);

struct OracleEstimate {
  double value = 0.0;
  double error = 0.0;
};

enum class OracleMethod { Quadrature, MonteCarlo };

/// Independent estimate of E phi(g)^p phi(g_hat)^r for any p, r >= 0.
///
/// Quadrature writes (g, w) in polar form, so the integrand factors into the
/// radial moment E R^{p+r} (Gauss-Laguerre in R^2/2) times an angular integral
/// over the arc where both ReLUs are active (Gauss-Legendre). Both factors are
/// smooth, which a plain Gauss-Hermite product rule is not across the ReLU
/// kinks. `budget` is the node count per axis; the error estimate is the
/// change against a half-size rule. MonteCarlo draws `budget` samples from
/// stream `seed` and reports one standard error.
OracleEstimate kernel_oracle(int p, int r, double rho, std::size_t budget,
                             OracleMethod method = OracleMethod::Quadrature, std::uint64_t seed = 0);

/// nu(rho) = ((c+ - c-)^2 / 2 pi) (sqrt(1 - rho^2) - rho arccos rho).
double nu(double rho, double c_plus, double c_minus);

/// ResNet covariance ODE nonlinearity f(rho) = (rho asin rho + sqrt(1-rho^2))/pi + rho/2.
double f_resnet(double rho);

/// He constant c = 1 / E phi_s(g)^2. Closed form for ReLU-like shaping,
/// Gauss-Hermite quadrature for smooth shaping.
double he_normalizer(const ShapingConfig& shaping);

/// E phi_s(g) phi_s(g_hat) for a ReLU-like activation with slopes s+ and s-.
double shaped_relu_k1(double rho, double s_plus, double s_minus);

/// Covariance SDE drift entry for smooth shaping, from (V^aa, V^ab, V^bb).
double smooth_drift(double v_aa, double v_ab, double v_bb, const ShapingConfig& shaping);

struct DriftDiffusionCoeffs {
  double mu_r = 0.0;      // expected drift of the correlation, in 1/n units
  double sigma_r2 = 0.0;  // variance coefficient, in 1/n units
};

/// Finite-width correlation chain coefficients for the unshaped ReLU with He
/// constant c.
DriftDiffusionCoeffs mu_sigma_correlation(double rho, double c = 2.0);

struct ExpandedUpdate {
  double deterministic = 0.0;  // rho + O((1-rho)^{3/2}) terms + 1/n terms
  double noise = 0.0;          // coefficient multiplying xi (includes 1/sqrt(n))
  double remainder = 0.0;      // (1-rho)^{7/2} + (1-rho)^3 / n
};

/// Expansion of one correlation-chain step about rho = 1. `n` may be +inf.
ExpandedUpdate expanded_correlation_update(double rho, double n);

}  // namespace kernels
}  // namespace covlim
