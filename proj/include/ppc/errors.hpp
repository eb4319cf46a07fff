#pragma once

#include <stdexcept>
#include <string>

namespace ppc {

/// Invalid configuration, schema violation, or out-of-domain request.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: non-convergence, unphysical parameter regime, bad data.
class ComputeError : public std::runtime_error {
public:
    explicit ComputeError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace ppc
