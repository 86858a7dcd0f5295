// Error taxonomy shared by all modules; maps 1:1 onto CLI exit codes.
#pragma once

#include <stdexcept>
#include <string>

namespace lsd {

// Bad inputs: malformed flags, out-of-range parameters, schema violations.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem and serialization failures.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Solver non-convergence or arithmetic overflow.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace lsd
