#include <iostream>

#include "perronopt/cli/commands.hpp"

int main(int argc, char** argv) { return perronopt::cli::main_entry(argc, argv, std::cout, std::cerr); }
