#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace pcib {

/// Base class for all pcib errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid argument values: out-of-range parameters, broken invariants,
/// violated preconditions.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Mismatched lengths/shapes between paired inputs.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Dataset or cache ingestion failure; carries the 1-based line number
/// when one applies.
class IngestionError : public Error {
public:
    IngestionError(const std::string& msg, long line)
        : Error(msg + " at line " + std::to_string(line)), line_(line) {}
    explicit IngestionError(const std::string& msg) : Error(msg), line_(-1) {}
    long line() const { return line_; }

private:
    long line_;
};

/// Bad run configuration (fold counts, flag combinations, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Data inconsistent with what an operation needs (non-finite features,
/// missing ids, single-class labels for a two-class metric).
class DataError : public Error {
public:
    using Error::Error;
};

/// Model training cannot proceed on the given matrix.
class TrainingError : public Error {
public:
    using Error::Error;
};

/// Backend unreachable, timed out, or returned an error status after
/// retries are exhausted.
class TransportError : public Error {
public:
    explicit TransportError(const std::string& msg) : Error(msg) {}
    TransportError(const std::string& msg, int http_status)
        : Error(msg + " (HTTP " + std::to_string(http_status) + ")"),
          status_(http_status) {}
    TransportError(const std::string& msg, std::optional<int> http_status,
                   bool /*verbatim*/)
        : Error(msg), status_(http_status) {}
    std::optional<int> http_status() const { return status_; }

private:
    std::optional<int> status_;
};

/// The backend is reachable but cannot provide what the pipeline needs
/// (e.g. no token-level logprobs). Never degraded silently.
class CapabilityError : public Error {
public:
    using Error::Error;
};

/// Model file cannot be parsed or has an incompatible format version.
class ModelFormatError : public Error {
public:
    using Error::Error;
};

}  // namespace pcib
