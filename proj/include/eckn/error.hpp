#pragma once

#include <stdexcept>

namespace eckn {

// Error taxonomy mirrored by the CLI exit codes:
// ConfigError -> 2, IoError -> 3, everything else thrown by the library -> 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Incompatible shapes/variants/arguments passed to an operation.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Numerically impossible request (degenerate reference, non-PSD Gram, ...).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace eckn
