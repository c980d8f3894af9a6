#pragma once

#include <stdexcept>
#include <string>

namespace banditlab {

/// Invalid user-facing configuration (bad parameter ranges, unknown names).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A caller broke a documented precondition.
class ContractViolation : public std::logic_error {
public:
    explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

/// Filesystem failures while writing results.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace banditlab
