#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace kinpot {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Precondition or invariant violated by the caller.
struct ContractError : Error {
    using Error::Error;
};

// Non-finite state during integration or time stepping.
struct BlowupError : Error {
    using Error::Error;
};

// Discretization error large enough to break a structural property.
struct AccuracyError : Error {
    using Error::Error;
};

struct InsufficientDataError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    std::vector<std::string> problems;
    explicit ConfigError(std::vector<std::string> p);
};

}  // namespace kinpot
