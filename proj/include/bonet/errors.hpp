#ifndef BONET_ERRORS_HPP
#define BONET_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace bonet {

// Bad configuration or parameters (invalid ranges, missing tasks, context overflow).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or truncated artifact files (datasets, trajectory files, checkpoints).
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite loss or gradient encountered during training.
class GradientError : public std::runtime_error {
public:
    explicit GradientError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bonet

#endif
