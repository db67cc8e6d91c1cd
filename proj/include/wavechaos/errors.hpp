#pragma once

#include <stdexcept>
#include <string>

namespace wavechaos {

// Bad parameters or preconditions. Maps to CLI exit code 2.
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Complexity guard (Wick degree cap, truncation depth).
struct CapExceeded : DomainError {
    using DomainError::DomainError;
};

struct ConfigError : DomainError {
    using DomainError::DomainError;
};

// Covariance has an eigenvalue below -eps_psd.
struct PsdError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Polynomial has a monomial with a repeated cell; no off-diagonal kernel represents it.
struct RequiresRefinement : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientData : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& msg)
{
    if (!ok) throw DomainError(msg);
}

} // namespace wavechaos
