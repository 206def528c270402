#include "gmnn/cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return gmnn::cli::run(argc, argv, std::cout, std::cerr); }
