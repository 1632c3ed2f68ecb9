#pragma once

#include <stdexcept>
#include <string>

namespace tsicl {

// Error families. The CLI maps them onto process exit codes:
// ArgumentError -> 2, DataError/FormatError -> 3, NumericError -> 4.

class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Shape disagreement between operands.
class DimensionError : public ArgumentError {
public:
    using ArgumentError::ArgumentError;
};

/// Caller violated a documented precondition (lengths, call ordering).
class ContractError : public ArgumentError {
public:
    using ArgumentError::ArgumentError;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad magic, unsupported version, malformed text.
class FormatError : public DataError {
public:
    using DataError::DataError;
};

/// Truncated payload or checksum mismatch.
class CorruptionError : public DataError {
public:
    using DataError::DataError;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input outside an operation's mathematical domain (e.g. log of a non-positive value).
class DomainError : public NumericError {
public:
    using NumericError::NumericError;
};

} // namespace tsicl
