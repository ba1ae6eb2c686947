// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace covlim {

/// Symmetric m x m covariance stored as its row-major upper triangle:
/// (0,0), (0,1), ..., (0,m-1), (1,1), ..., (m-1,m-1).
class CovMatrix {
 public:
  CovMatrix() = default;
  explicit CovMatrix(std::size_t m) : m_(m), upper_(packed_size(m), 0.0) {}

  /// Reads the upper triangle of `dense`; the lower triangle is ignored.
  static CovMatrix from_dense(const Eigen::MatrixXd& dense);
  static CovMatrix from_packed(std::size_t m, std::vector<double> upper);
  /// Unit diagonal with every off-diagonal entry equal to `rho`.
  static CovMatrix equicorrelated(std::size_t m, double rho, double variance = 1.0);

  static constexpr std::size_t packed_size(std::size_t m) noexcept { return m * (m + 1) / 2; }
  /// Flat index of (a, b), symmetric in its arguments.
  static std::size_t flat_index(std::size_t a, std::size_t b, std::size_t m) noexcept;

  std::size_t dim() const noexcept { return m_; }
  double operator()(std::size_t a, std::size_t b) const noexcept { return upper_[flat_index(a, b, m_)]; }
  double& operator()(std::size_t a, std::size_t b) noexcept { return upper_[flat_index(a, b, m_)]; }

  std::span<const double> packed() const noexcept { return upper_; }
  std::span<double> packed() noexcept { return upper_; }

  Eigen::MatrixXd dense() const;

  friend bool operator==(const CovMatrix&, const CovMatrix&) = default;

 private:
  std::size_t m_ = 0;
  std::vector<double> upper_;
};

/// Relative tolerance for treating a slightly negative eigenvalue as zero.
inline constexpr double kPsdTolerance = 1e-10;

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Eigen::MatrixXd& sym);

/// Symmetric square root U diag(sqrt(max(lambda, 0))) U^T.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& sym);

/// Clips negative eigenvalues to zero when the smallest eigenvalue is below
/// -tol * max(1, max|lambda|). Returns true when a projection happened.
bool project_psd(CovMatrix& v, double tol = kPsdTolerance);

/// F with F F^T = V, from a pivoted LDL^T decomposition. Rows of F that
/// belong to perfectly correlated coordinates come out identical, so
/// Gaussians sampled through F keep exact equalities. Throws
/// ErrorKind::Factorization if V is not PSD within `tol`.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& v, double tol = kPsdTolerance);

}  // namespace covlim
