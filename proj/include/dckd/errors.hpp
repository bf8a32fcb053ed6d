#pragma once

#include <stdexcept>

namespace dckd {

// Error taxonomy. Bad call arguments use std::invalid_argument directly;
// the types below cover the remaining failure classes.

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Values that violate a numeric contract (NaN logits, non-distribution rows).
struct InvalidInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Object is not in a usable state for the requested operation.
struct StateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A verification routine could not run to completion.
struct CheckFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or corrupt file content (checkpoints, IDX files).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A subcommand needs an artifact that has not been produced yet.
struct DependencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace dckd
