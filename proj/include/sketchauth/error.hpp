#pragma once

#include <stdexcept>
#include <string>

namespace sketchauth {

/// Bad input: malformed manifest, inconsistent configuration, violated preconditions.
/// The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Failure while doing work on valid input (I/O, decode, divergence). Exit code 2.
class RuntimeFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace sketchauth
