// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#include "covlim/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include <Eigen/Eigenvalues>

#include "covlim/error.hpp"

namespace covlim::quadrature {
namespace {

// Symmetric Jacobi matrix with `diag` and `offdiag`; mu0 is the total mass of
// the weight function.
Rule golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& offdiag, double mu0) {
  const auto n = diag.size();
  Rule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  if (n == 1) {
    rule.nodes[0] = diag[0];
    rule.weights[0] = mu0;
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, offdiag, Eigen::ComputeEigenvectors);
  for (Eigen::Index i = 0; i < n; ++i) {
    rule.nodes[i] = solver.eigenvalues()[i];
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  return rule;
}

enum class Family { Legendre, Laguerre, Hermite };

Rule build(Family family, std::size_t n) {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd off = Eigen::VectorXd::Zero(n > 1 ? n - 1 : 0);
  double mu0 = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double kk = static_cast<double>(k);
    switch (family) {
      case Family::Legendre:
        if (k > 0) off[k - 1] = kk / std::sqrt(4.0 * kk * kk - 1.0);
        mu0 = 2.0;
        break;
      case Family::Laguerre:
        diag[k] = 2.0 * kk + 1.0;
        if (k > 0) off[k - 1] = kk;
        break;
      case Family::Hermite:
        if (k > 0) off[k - 1] = std::sqrt(kk);
        break;
    }
  }
  return golub_welsch(diag, off, mu0);
}

const Rule& cached(Family family, std::size_t n) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "quadrature", "rule", "rule size must be positive");
  static std::mutex mutex;
  static std::map<std::pair<Family, std::size_t>, std::unique_ptr<Rule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{family, n}];
  if (!slot) slot = std::make_unique<Rule>(build(family, n));
  return *slot;
}

}  // namespace

const Rule& legendre(std::size_t n) { return cached(Family::Legendre, n); }
const Rule& laguerre(std::size_t n) { return cached(Family::Laguerre, n); }
const Rule& hermite(std::size_t n) { return cached(Family::Hermite, n); }

}  // namespace covlim::quadrature
