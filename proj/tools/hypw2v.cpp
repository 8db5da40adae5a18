#include <string>
#include <vector>

#include "hypw2v/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return hypw2v::cli::run_command(std::move(args));
}
