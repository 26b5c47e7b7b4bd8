#include <unistd.h>

#include <iostream>
#include <string>
#include <vector>

#include "sleec/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  sleec::cli::CliIO io{std::cin, std::cout, std::cerr,
                       isatty(fileno(stdout)) == 1};
  return sleec::cli::run_cli(std::move(args), io);
}
