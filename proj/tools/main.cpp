#include <iostream>

#include "openeval/cli.hpp"

int main(int argc, char** argv) {
  return openeval::run_cli(argc, argv, std::cout, std::cerr);
}
