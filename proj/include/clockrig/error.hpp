#pragma once

#include <stdexcept>
#include <string>

namespace clockrig {

// Raised for violated preconditions and malformed inputs throughout the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by the estimators when the objective keeps increasing under fixed steps.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace clockrig
