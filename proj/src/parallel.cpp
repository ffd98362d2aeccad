#include "langevin/parallel.hpp"

#include <cstdlib>
#include <string>

#include <omp.h>

namespace langevin {

int apply_thread_limit_from_env() {
  if (const char* text = std::getenv("LANGEVIN_THREADS")) {
    try {
      std::size_t used = 0;
      const int n = std::stoi(text, &used);
      if (n > 0 && used == std::string(text).size()) omp_set_num_threads(n);
    } catch (const std::exception&) {
    }
  }
  return max_threads();
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace langevin
