#include <iostream>

#include "epiou/cli.hpp"

int main(int argc, char** argv) { return epiou::cli::run(argc, argv, std::cout, std::cerr); }
