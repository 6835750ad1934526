#include <iostream>

#include "fprig/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return fprig::cli_main(args, std::cout, std::cerr);
}
