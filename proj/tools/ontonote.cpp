#include <iostream>

#include "ontonote/cli.hpp"

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  return ontonote::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
