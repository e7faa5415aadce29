#pragma once

#include <stdexcept>
#include <string>

namespace pwstable {

// All library failures derive from this so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised on invalid inputs or configuration (bad parameters, malformed files).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Raised when a computation is undefined for otherwise valid inputs
// (degenerate distribution, empty conditioning event, R = 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace pwstable
