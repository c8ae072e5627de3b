// SPDX-License-Identifier: Apache-2.0
#include "rr/cli.hpp"

int main(int argc, char** argv) { return rr::cli::run(argc, argv); }
