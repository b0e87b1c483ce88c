#include <iostream>

#include "coffee/cli/cli.hpp"

int main(int argc, char** argv) { return coffee::run_cli(argc, argv, std::cout, std::cerr); }
