#include <iostream>
#include <string>
#include <vector>

#include "fedcache/tools/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return fedcache::tools::cli_main(args, std::cout, std::cerr);
}
