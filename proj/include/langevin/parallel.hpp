#pragma once

namespace langevin {

// Caps OpenMP threads at LANGEVIN_THREADS when that variable holds a
// positive integer. Returns the resulting maximum thread count.
int apply_thread_limit_from_env();

int max_threads();

}  // namespace langevin
