#pragma once

#include <stdexcept>
#include <string>

namespace ofbm {

// Error taxonomy shared by all modules. The CLI maps these onto exit codes.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed arguments: wrong shapes, non-finite entries, contradictory options.
struct InvalidInputError : Error {
  explicit InvalidInputError(const std::string& msg) : Error(msg) {}
};

// Structurally valid input outside an operation's mathematical domain (c <= 0, ...).
struct DomainError : Error {
  explicit DomainError(const std::string& msg) : Error(msg) {}
};

// An iteration or quadrature failed to reach its accuracy contract.
struct NumericalFailureError : Error {
  explicit NumericalFailureError(const std::string& msg) : Error(msg) {}
};

// A matrix required to be positive semidefinite is not, even after jitter.
struct NotPositiveSemidefiniteError : Error {
  explicit NotPositiveSemidefiniteError(const std::string& msg) : Error(msg) {}
};

}  // namespace ofbm
