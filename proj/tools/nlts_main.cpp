#include <iostream>
#include <string>
#include <vector>

#include "nlts/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return nlts::cli::main(args, std::cout, std::cerr);
}
