#include <iostream>
#include <string>
#include <vector>

#include "rtf/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return rtf::run_cli(args, std::cout, std::cerr);
}
