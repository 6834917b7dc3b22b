#pragma once

#include <stdexcept>
#include <string>

namespace detailnet {

// Error taxonomy. Validation-type errors (shape/config/data/usage/format)
// map to exit code 1 in the CLI, everything else to 2.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor dimension disagreement between operands.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Invalid configuration value (non-positive stride, unknown preset, ...).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Semantically invalid data (negative variance, no valid pixels, ...).
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

// API misuse (backward on non-scalar, reused tape, ...).
class UsageError : public Error {
public:
    explicit UsageError(const std::string& msg) : Error(msg) {}
};

// Malformed file contents (bad magic, version mismatch, truncation).
class FormatError : public Error {
public:
    explicit FormatError(const std::string& msg) : Error(msg) {}
};

// Readable file written by an incompatible format version.
class VersionError : public FormatError {
public:
    explicit VersionError(const std::string& msg) : FormatError(msg) {}
};

// File shorter than its own declared contents.
class CorruptionError : public FormatError {
public:
    explicit CorruptionError(const std::string& msg) : FormatError(msg) {}
};

// Filesystem failure (unreadable path, write failure).
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace detailnet
