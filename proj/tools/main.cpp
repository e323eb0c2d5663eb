#include <iostream>

#include "tgh/cli.hpp"

int main(int argc, char** argv) { return tgh::cli::run(argc, argv, std::cout, std::cerr); }
