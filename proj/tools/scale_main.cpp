#include <iostream>

#include "scale/cli.hpp"

extern char** environ;

int main(int argc, char** argv) {
  return scale::cli::main_entry(argc, argv, environ, std::cout, std::cerr);
}
