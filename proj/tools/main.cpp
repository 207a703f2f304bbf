#include <iostream>

#include "toporel/cli.hpp"

int main(int argc, char** argv) { return toporel::cli::run_cli(argc, argv, std::cout, std::cerr); }
