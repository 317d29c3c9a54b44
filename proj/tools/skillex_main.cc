#include <iostream>
#include <string>
#include <vector>

#include "skillex/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return skillex::cli::run(args, std::cout, std::cerr);
}
