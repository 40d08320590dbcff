#pragma once

#include <stdexcept>
#include <string>

namespace landscape {

/// Input rejected by a precondition or by an assumption check.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative solver failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace landscape
