#include <iostream>

#include "permcd/cli.hpp"

int main(int argc, char** argv) { return permcd::run_cli(argc, argv, std::cout, std::cerr); }
