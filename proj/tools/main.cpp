#include <iostream>

#include "swarmstab/cli.hpp"

int main(int argc, char** argv) { return swarmstab::cli::run(argc, argv, std::cout, std::cerr); }
