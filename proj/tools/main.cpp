#include "commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return gsc::cli::run_cli(argc, argv, std::cerr); }
