#pragma once

#include <stdexcept>
#include <string>

namespace logistory {

// Root of every exception thrown by the library. Each module derives its own
// type so callers can tell a planning failure from an evaluation failure.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class StatsError : public Error {
 public:
  using Error::Error;
};

}  // namespace logistory
