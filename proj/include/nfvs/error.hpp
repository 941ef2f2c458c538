// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace nfvs {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A value violates a documented precondition or type invariant.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// The echo model has zero energy (e.g. an all-zero transmit matrix).
class DegenerateModel : public Error {
public:
    using Error::Error;
};

/// The objective or its gradient became NaN/Inf during estimation.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

/// Configuration file problem; the message carries the field path.
class ConfigError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
    if (!condition) throw InvalidArgument(message);
}

} // namespace detail
} // namespace nfvs
