#include <iostream>

#include "equipact/cli.hpp"

int main(int argc, char** argv) { return equipact::cli::run(argc, argv, std::cout, std::cerr); }
