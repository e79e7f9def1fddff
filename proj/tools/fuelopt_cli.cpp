#include <iostream>

#include "fuelopt/cli.hpp"

int main(int argc, char** argv) { return fuelopt::cli::run(argc, argv, std::cout, std::cerr); }
