#include <vector>

#include "xqfed/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return xqfed::cliMain(args);
}
