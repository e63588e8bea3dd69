#pragma once

#include <stdexcept>
#include <string>

namespace smcnn {

// Error hierarchy mirrored by the CLI exit-code table:
//   1 usage, 2 I/O, 3 format, 4 degenerate data.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad arguments, bad config keys, contract violations.
class UsageError : public Error {
public:
    using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// On-disk data does not match the declared format.
class FormatError : public Error {
public:
    using Error::Error;
};

class TruncatedError : public FormatError {
public:
    using FormatError::FormatError;
};

class ChecksumError : public FormatError {
public:
    using FormatError::FormatError;
};

class VersionError : public FormatError {
public:
    using FormatError::FormatError;
};

/// Input data is structurally valid but degenerate (single class, zero variance, ...).
class DataError : public Error {
public:
    using Error::Error;
};

/// Non-finite values where finite ones are required (divergence, NaN input).
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace smcnn
