//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <iostream>

#include "moco/cli/commands.hpp"

int main(int argc, char **argv) {
  return moco::cli::run(argc, argv, { std::cout, std::cerr });
}
