#pragma once

#include <stdexcept>
#include <string>

namespace wsnsync {

/// Invalid scenario or configuration value. The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// A caller broke an operation's precondition (e.g. a beacon arrived out of order).
class PreconditionError : public std::invalid_argument {
public:
    explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

} // namespace wsnsync
