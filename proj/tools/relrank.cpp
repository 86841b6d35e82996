#include <iostream>

#include "relrank/cli.hpp"

int main(int argc, char** argv) { return relrank::run_cli(argc, argv, std::cout, std::cerr); }
