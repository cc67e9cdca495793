#include <iostream>

#include "fsnas/cli.hpp"

int main(int argc, char** argv) {
  return fsnas::run_command(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
