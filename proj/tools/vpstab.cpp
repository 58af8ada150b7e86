#include <iostream>

#include "vpstab/cli.hpp"

int main(int argc, char** argv) { return vpstab::run_cli(argc, argv, std::cout, std::cerr); }
