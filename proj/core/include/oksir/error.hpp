#pragma once

#include <stdexcept>
#include <string>

namespace oksir {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent caller input (dimension mismatch, bad config, bad CSV row).
class InputError : public Error {
public:
    using Error::Error;
};

/// Operation requested on a state that cannot support it (empty dictionary, model still warming up).
class StateError : public Error {
public:
    using Error::Error;
};

/// Floating-point breakdown: nonpositive ALD residual, failed factorization, divergence.
class NumericError : public Error {
public:
    using Error::Error;
};

/// The stochastic eigen-update produced non-finite or exploding values.
class DivergenceError : public NumericError {
public:
    using NumericError::NumericError;
};

/// Serialized payload is truncated, malformed or of an unsupported version.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace oksir
