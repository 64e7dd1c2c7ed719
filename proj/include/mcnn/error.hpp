#ifndef MCNN_ERROR_HPP
#define MCNN_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mcnn {

/// Invalid configuration: bad dimensions, bad hyperparameters, mismatched shapes.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Value outside its domain (negative travel time, out-of-range class index, ...).
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numeric failure at runtime: non-finite inputs, gradients or losses.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// File parsing / serialization failure.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Out-of-order or duplicate live observation.
struct SequencingError : std::runtime_error {
    explicit SequencingError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mcnn

#endif  // MCNN_ERROR_HPP
