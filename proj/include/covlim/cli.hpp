// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>

namespace covlim {

/// Exit codes of the command line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,  // unexpected internal failure
  kExitSchema = 2,   // config or flag problem, report names the field
  kExitNumeric = 3,  // numeric failure, report names module and op
  kExitIo = 4,       // unreadable or unwritable file
};

/// Runs the covlim command line. Success prints a JSON summary on `out`;
/// failures print a one-line JSON error report on `err`.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace covlim
