// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

namespace covlim::quadrature {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss rules from the Golub-Welsch eigenproblem. Rules are cached per size
// and the returned references stay valid for the life of the process.

/// Gauss-Legendre on [-1, 1]; weights sum to 2.
const Rule& legendre(std::size_t n);
/// Gauss-Laguerre for weight e^{-s} on [0, inf); weights sum to 1.
const Rule& laguerre(std::size_t n);
/// Probabilists' Gauss-Hermite: expectation under N(0, 1); weights sum to 1.
const Rule& hermite(std::size_t n);

}  // namespace covlim::quadrature
