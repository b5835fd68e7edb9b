#include <iostream>

#include "routechain/cli/runner.hpp"

int main(int argc, char** argv) { return routechain::cli::main_entry(argc, argv, std::cout, std::cerr); }
