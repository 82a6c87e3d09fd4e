#pragma once

#include <stdexcept>
#include <string>

namespace uhddip {

// Error taxonomy used across the library. Everything derives from
// std::runtime_error so callers can catch coarsely or precisely.

// Shape/extent mismatch between tensors or images.
class DimensionError : public std::runtime_error {
public:
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration value (bad factor, even kernel, non power-of-two, ...).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// API misuse (non-scalar loss, empty image, mismatched pair, ...).
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Failure while reading external data (file missing, wrong dims, bad magic).
class IngestError : public std::runtime_error {
public:
    explicit IngestError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite value detected in a computation; message names the layer.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace uhddip
