#include <iostream>

#include "csdac/cli.hpp"

int main(int argc, char** argv) {
  return csdac::cli::run(argc, argv, std::cout, std::cerr);
}
