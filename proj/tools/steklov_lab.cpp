#include <string>
#include <vector>

#include "steklovlab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return steklovlab::cli::run(args);
}
