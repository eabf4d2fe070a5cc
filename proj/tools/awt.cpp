#include "awt/cli/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return awt::run_cli(argc, argv, std::cout, std::cerr); }
