#pragma once

#include <stdexcept>
#include <string>

namespace cvtn {

/// Tensor extents do not line up (e.g. matmul inner dimensions).
class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

/// A configuration value is invalid (even kernel, heads not dividing L, ...).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite values where finite ones are required.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// An API contract was violated (non-scalar loss, shape drift mid-model, ...).
class ContractError : public std::runtime_error {
public:
    explicit ContractError(const std::string& what) : std::runtime_error(what) {}
};

/// File input could not be read or parsed.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace cvtn
