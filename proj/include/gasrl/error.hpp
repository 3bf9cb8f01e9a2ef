#pragma once

#include <stdexcept>
#include <string>

namespace gasrl {

/// Broad failure categories. The CLI maps each one to a process exit code.
enum class ErrorCategory {
    config,   // invalid parameters or config files
    data,     // malformed or inconsistent input data (CSV, checkpoints, fits)
    runtime,  // protocol misuse, shape mismatches, numeric blow-ups, I/O
};

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

/// Invalid configuration value; the message names the offending field.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

/// Checkpoint/file format problems, including version mismatches.
class FormatError : public DataError {
public:
    explicit FormatError(const std::string& what) : DataError(what) {}
};

/// Regression / least-squares failures (rank deficiency, empty groups).
class FitError : public DataError {
public:
    explicit FitError(const std::string& what) : DataError(what) {}
};

/// Misaligned series handed to an aggregation.
class AlignmentError : public DataError {
public:
    explicit AlignmentError(const std::string& what) : DataError(what) {}
};

/// Argument outside the mathematical domain of an operation (e.g. log of a non-positive price).
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(ErrorCategory::runtime, what) {}
};

/// Operation called in the wrong state (step after done, sampling an underfilled buffer).
class ProtocolError : public Error {
public:
    explicit ProtocolError(const std::string& what) : Error(ErrorCategory::runtime, what) {}
};

class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& what) : Error(ErrorCategory::runtime, what) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorCategory::runtime, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorCategory::runtime, what) {}
};

}  // namespace gasrl
