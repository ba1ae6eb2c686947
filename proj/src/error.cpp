// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#include "covlim/error.hpp"

namespace covlim {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::UnsupportedKernel: return "unsupported_kernel";
    case ErrorKind::DegenerateActivation: return "degenerate_activation";
    case ErrorKind::DegenerateCovariance: return "degenerate_covariance";
    case ErrorKind::DegenerateSample: return "degenerate_sample";
    case ErrorKind::Factorization: return "factorization";
    case ErrorKind::Limits: return "limits";
    case ErrorKind::Singularity: return "singularity";
    case ErrorKind::NonFinite: return "non_finite";
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace covlim
