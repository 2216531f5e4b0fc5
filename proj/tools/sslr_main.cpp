#include "sslr/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return sslr::run_cli(argc, argv, std::cout, std::cerr);
}
