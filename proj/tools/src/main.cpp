#include <iostream>

#include "ister_cli/cli.hpp"

int main(int argc, char** argv) { return ister::cli::run(argc, argv, std::cout, std::cerr); }
