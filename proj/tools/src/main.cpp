#include <iostream>

#include "betagas/cli/cli.hpp"

int main(int argc, char** argv) { return betagas::cli::run_cli(argc, argv, std::cout, std::cerr); }
