#include "plastica/runner/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return plastica::runner::cli_main(argc, argv, std::cout, std::cerr); }
