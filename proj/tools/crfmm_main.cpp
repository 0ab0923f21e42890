#include "crfmm/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return crfmm::run_cli(argc, argv, std::cout, std::cerr); }
