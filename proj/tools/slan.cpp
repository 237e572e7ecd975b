#include "slan_cli.hpp"

int main(int argc, char** argv) {
  return slan::cli::run(argc, argv, std::cin, std::cout, std::cerr);
}
