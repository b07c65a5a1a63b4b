#pragma once

#include <stdexcept>
#include <string>

namespace qsw {

// Error taxonomy shared by every module. All of these derive from
// std::runtime_error so callers can catch coarsely or precisely.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A register name collided or was not found.
struct NameClash : Error {
  explicit NameClash(const std::string& msg) : Error(msg) {}
};

// Matrix/vector dimensions do not match the declared register layout.
struct ShapeError : Error {
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// supp(rho) is not contained in supp(sigma); +infinity is never returned
// silently.
struct SupportError : Error {
  explicit SupportError(const std::string& msg) : Error(msg) {}
};

// A scalar parameter is outside its admissible range.
struct DomainError : Error {
  explicit DomainError(const std::string& msg) : Error(msg) {}
};

// A dense construction would exceed the dimension cap.
struct CapacityError : Error {
  explicit CapacityError(const std::string& msg) : Error(msg) {}
};

// An operator failed a declared contract (isometry, commutation, ...).
struct ContractViolation : Error {
  explicit ContractViolation(const std::string& msg) : Error(msg) {}
};

// A bisection bracket was exhausted or a numerical invariant broke down.
struct NumericalError : Error {
  explicit NumericalError(const std::string& msg) : Error(msg) {}
};

}  // namespace qsw
