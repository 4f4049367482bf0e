#include <iostream>

#include "hawkes/cli.hpp"

int main(int argc, char** argv) { return hawkes::cli::run(argc, argv, std::cout, std::cerr); }
