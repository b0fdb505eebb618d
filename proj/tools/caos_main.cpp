#include "caos/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return caos::run_cli(argc, argv, std::cout, std::cerr); }
