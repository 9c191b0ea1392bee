#include <iostream>

#include "cran/cli.hpp"

int main(int argc, char** argv) { return cran::cli_main(argc, argv, std::cout, std::cerr); }
