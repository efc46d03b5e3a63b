#include <iostream>
#include <string>
#include <vector>

#include "parcon/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  const int code = parcon::dispatch(args, std::cout, std::cerr);
  std::cout.flush();
  return code;
}
