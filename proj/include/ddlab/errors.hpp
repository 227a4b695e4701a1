#pragma once

#include <stdexcept>
#include <string>

namespace ddlab {

// Bad or inconsistent run configuration. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numeric or admissibility failure (schedule out of range, inadmissible
// family, degenerate step, ...). The CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace ddlab
