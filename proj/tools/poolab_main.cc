// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "poolab/cli.h"

int main(int argc, char** argv) { return poolab::RunCli(argc, argv, std::cout, std::cerr); }
