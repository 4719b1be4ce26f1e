// errors.hpp — error taxonomy shared by all modules
#pragma once

#include <stdexcept>
#include <string>

namespace qpsb {

// Bad user-supplied configuration (missing blocks, empty grids, violated
// structural preconditions). Mapped to exit code 2 by the CLI.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A numerical routine failed to reach its tolerance (quadrature
// non-convergence, bracket failure, truncation leakage). Exit code 4.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace qpsb
