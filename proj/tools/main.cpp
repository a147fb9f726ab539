#include <iostream>

#include "e2e/cli.hpp"

int main(int argc, char** argv) { return e2e::cli::parse_and_dispatch(argc, argv, std::cout, std::cerr); }
