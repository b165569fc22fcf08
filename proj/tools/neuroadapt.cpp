#include "neuroadapt/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return neuroadapt::run_cli(argc, argv, std::cout, std::cerr); }
