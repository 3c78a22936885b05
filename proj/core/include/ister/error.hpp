#pragma once

#include <stdexcept>
#include <string>

namespace ister {

/// Incompatible shapes or sizes passed to an operation.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A non-finite value appeared, or an optimizer/loss diverged.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or insufficient input data (CSV contents, split sizes, ...).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Misuse of the autodiff tape (double backward, non-scalar loss, ...).
class TapeError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace ister
