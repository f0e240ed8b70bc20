#include <iostream>

#include "msda/cli/commands.hpp"

int main(int argc, char** argv) { return msda::cli::run(argc, argv, std::cout, std::cerr); }
