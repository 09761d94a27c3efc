#pragma once

#include <stdexcept>
#include <string>

namespace seirdiff {

// Error taxonomy mirrors the CLI exit-code contract:
//   parse_error -> 2, validation_error -> 3, solver_error -> 4, optimizer_error -> 5.
// Verification threshold failures are plain exit codes, not exceptions.

struct parse_error : std::runtime_error {
    explicit parse_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct validation_error : std::runtime_error {
    explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct solver_error : std::runtime_error {
    explicit solver_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct optimizer_error : std::runtime_error {
    explicit optimizer_error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw validation_error(msg);
}

} // namespace seirdiff
