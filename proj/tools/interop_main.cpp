#include <csignal>
#include <iostream>

#include "interop/cli.hpp"

int main(int argc, char** argv) {
  std::signal(SIGPIPE, SIG_IGN);
  return interop::cli::run_cli(argc, argv, std::cout, std::cerr);
}
