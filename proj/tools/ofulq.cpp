#include <iostream>
#include <string>
#include <vector>

#include "ofulq/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return ofulq::run_cli(args, std::cout, std::cerr);
}
