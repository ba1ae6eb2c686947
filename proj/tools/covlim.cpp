// Copyright 2026 The covlim Authors
// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "covlim/cli.hpp"

int main(int argc, char** argv) { return covlim::cli_main(argc, argv, std::cout, std::cerr); }
