#pragma once

#include <stdexcept>

namespace roughsing {

// Invalid parameters, malformed configs, contract violations. CLI maps to exit 2.
struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Runtime numerical failure: non-finite samples, overflow, strict-mode divergence. Exit 3.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace roughsing
