// Copyright 2026 The poolab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef POOLAB_CLI_H_
#define POOLAB_CLI_H_

#include <iosfwd>

namespace poolab {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitNumeric = 4,
};

// Subcommands: train, encode, eval, compare, analyze-layers, gen-synthetic.
int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace poolab

#endif  // POOLAB_CLI_H_
