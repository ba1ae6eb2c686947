// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace covlim {

enum class ErrorKind {
  Domain,                // argument outside its mathematical domain
  UnsupportedKernel,     // (p, r) pair without a closed form
  DegenerateActivation,  // E phi_s(g)^2 == 0
  DegenerateCovariance,  // nonpositive diagonal
  DegenerateSample,      // zero-variance sample set
  Factorization,         // matrix not PSD beyond tolerance
  Limits,                // width/depth/memory caps exceeded
  Singularity,           // 1/t evaluated at t = 0
  NonFinite,             // solver produced inf/nan
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Numeric or contract failure raised by a library operation. Carries the
/// module and operation names so the runner can build a machine-readable
/// report.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, std::string op, const std::string& what)
      : std::runtime_error(what), kind_(kind), module_(std::move(module)), op_(std::move(op)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }
  const std::string& op() const noexcept { return op_; }

 private:
  ErrorKind kind_;
  std::string module_;
  std::string op_;
};

}  // namespace covlim
