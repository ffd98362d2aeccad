#include <iostream>

#include "cli.hpp"
#include "langevin/parallel.hpp"

int main(int argc, char** argv) {
  langevin::apply_thread_limit_from_env();
  return langevin::cli::run(argc, argv, std::cout, std::cerr);
}
