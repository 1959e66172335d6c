#include "invprox/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return invprox::run_cli(argc, argv, std::cout, std::cerr); }
