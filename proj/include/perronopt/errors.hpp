#pragma once

#include <stdexcept>
#include <string>

namespace perronopt {

// Raised when an input violates an operation's precondition (nonpositive
// rate, n out of range, malformed file). The CLI maps it to exit status 2.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when an iterative method fails to reach its tolerance. Carries the
// last residual so callers can report how far off the iteration was.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double residual)
      : std::runtime_error(what + " (last residual " + std::to_string(residual) + ")"),
        residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace perronopt
