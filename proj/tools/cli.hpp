#pragma once

#include <ostream>

namespace langevin::cli {

// Runs one command. Returns the process exit status: 0 on success, 2 for
// usage or parameter errors, 1 for numerical failures.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace langevin::cli
