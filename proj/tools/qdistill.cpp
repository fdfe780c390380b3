#include <iostream>

#include "qdistill/cli.hpp"

int main(int argc, char** argv) { return qdistill::run_cli(argc, argv, std::cout, std::cerr); }
