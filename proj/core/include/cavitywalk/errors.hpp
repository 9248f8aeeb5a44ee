#pragma once

#include <stdexcept>
#include <string>

namespace cavitywalk {

// Bad inputs: out-of-range parameters, inconsistent configs, malformed files.
// The CLI maps these to exit code 1.
class validation_error : public std::invalid_argument {
public:
    explicit validation_error(const std::string& what) : std::invalid_argument(what) {}
};

// Failures of a numerical procedure on otherwise valid inputs (fit did not
// converge, trial budget exhausted, ...). The CLI maps these to exit code 2.
class estimation_error : public std::runtime_error {
public:
    explicit estimation_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cavitywalk
