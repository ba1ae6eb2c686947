// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#include "covlim/cov_matrix.hpp"

#include <algorithm>
#include <cmath>

#include "covlim/error.hpp"

namespace covlim {

std::size_t CovMatrix::flat_index(std::size_t a, std::size_t b, std::size_t m) noexcept {
  if (a > b) std::swap(a, b);
  // Rows 0..a-1 hold m + (m-1) + ... + (m-a+1) entries.
  return a * m - a * (a - 1) / 2 + (b - a);
}

CovMatrix CovMatrix::from_dense(const Eigen::MatrixXd& dense) {
  if (dense.rows() != dense.cols()) {
    throw Error(ErrorKind::InvalidArgument, "cov_matrix", "from_dense", "matrix is not square");
  }
  CovMatrix v(static_cast<std::size_t>(dense.rows()));
  for (std::size_t a = 0; a < v.m_; ++a)
    for (std::size_t b = a; b < v.m_; ++b) v(a, b) = dense(a, b);
  return v;
}

CovMatrix CovMatrix::from_packed(std::size_t m, std::vector<double> upper) {
  if (upper.size() != packed_size(m)) {
    throw Error(ErrorKind::InvalidArgument, "cov_matrix", "from_packed", "packed length does not match m(m+1)/2");
  }
  CovMatrix v;
  v.m_ = m;
  v.upper_ = std::move(upper);
  return v;
}

CovMatrix CovMatrix::equicorrelated(std::size_t m, double rho, double variance) {
  CovMatrix v(m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a; b < m; ++b) v(a, b) = a == b ? variance : rho * variance;
  return v;
}

Eigen::MatrixXd CovMatrix::dense() const {
  Eigen::MatrixXd out(m_, m_);
  for (std::size_t a = 0; a < m_; ++a)
    for (std::size_t b = a; b < m_; ++b) out(a, b) = out(b, a) = (*this)(a, b);
  return out;
}

double min_eigenvalue(const Eigen::MatrixXd& sym) {
  if (sym.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& sym) {
  if (sym.rows() == 1) return Eigen::MatrixXd::Constant(1, 1, std::sqrt(std::max(sym(0, 0), 0.0)));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  const Eigen::VectorXd roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * roots.asDiagonal() * solver.eigenvectors().transpose();
}

bool project_psd(CovMatrix& v, double tol) {
  const Eigen::MatrixXd dense = v.dense();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense);
  const Eigen::VectorXd& lambda = solver.eigenvalues();
  const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
  if (lambda.minCoeff() >= -tol * scale) return false;
  const Eigen::MatrixXd fixed =
      solver.eigenvectors() * lambda.cwiseMax(0.0).asDiagonal() * solver.eigenvectors().transpose();
  v = CovMatrix::from_dense(fixed);
  return true;
}

Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& v, double tol) {
  const auto m = v.rows();
  if (m == 1) {
    if (v(0, 0) < -tol * std::max(1.0, std::abs(v(0, 0)))) {
      throw Error(ErrorKind::Factorization, "cov_matrix", "psd_factor", "negative variance");
    }
    return Eigen::MatrixXd::Constant(1, 1, std::sqrt(std::max(v(0, 0), 0.0)));
  }
  const double scale = std::max(1.0, v.diagonal().cwiseAbs().maxCoeff());
  auto not_psd = [] {
    return Error(ErrorKind::Factorization, "cov_matrix", "psd_factor",
                 "covariance is not positive semidefinite within tolerance");
  };
  Eigen::LDLT<Eigen::MatrixXd> ldlt(v);
  const Eigen::VectorXd d = ldlt.vectorD();
  if (d.minCoeff() < -tol * scale) throw not_psd();
  const Eigen::MatrixXd lower = ldlt.matrixL();
  // V = P^T L D L^T P
  Eigen::MatrixXd factor = ldlt.transpositionsP().transpose() * (lower * d.cwiseMax(0.0).cwiseSqrt().asDiagonal());
  // Eigen flags a zero pivot whose column holds rounding noise; accept the
  // factor when it still reproduces V, else fall back to the eigenbasis.
  if (ldlt.info() == Eigen::Success || (factor * factor.transpose() - v).cwiseAbs().maxCoeff() <= tol * scale) {
    return factor;
  }
  if (min_eigenvalue(v) < -tol * scale) throw not_psd();
  return psd_sqrt(v);
}

}  // namespace covlim
