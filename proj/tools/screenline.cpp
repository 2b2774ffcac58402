#include <iostream>

#include "screenline/cli.hpp"

int main(int argc, char** argv) { return screenline::cli::run(argc, argv, std::cout, std::cerr); }
