// SPDX-License-Identifier: Apache-2.0
#include "ordspec/cli.hpp"

int main(int argc, char** argv) { return ordspec::run_cli(argc, argv); }
