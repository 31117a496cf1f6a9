#include <iostream>

#include "fusemap/commands.hpp"

int main(int argc, char** argv) { return fusemap::run_cli(argc, argv, std::cout, std::cerr); }
