#include <iostream>

#include "mwlil/cli.hpp"

int main(int argc, char** argv) { return mwlil::run_cli(argc, argv, std::cout, std::cerr); }
