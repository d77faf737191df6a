#include <iostream>

#include "glad/cli.hpp"

int main(int argc, char** argv) { return glad::cli::run(argc, argv, std::cout, std::cerr); }
