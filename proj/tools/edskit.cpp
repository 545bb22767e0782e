#include <iostream>
#include <string>
#include <vector>

#include "edskit/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return edskit::cli::run(args, std::cout, std::cerr);
}
