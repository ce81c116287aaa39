// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace rescal {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Grid dimensions that are not powers of two, do not divide, or do not match.
class SizeError : public Error {
public:
    using Error::Error;
};

/// Argument outside its mathematical domain (noise level, step count, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed input file or config value.
class ParseError : public Error {
public:
    using Error::Error;
};

/// A loaded artifact violates one of its invariants.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// NaN or Inf produced during a computation.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace rescal
