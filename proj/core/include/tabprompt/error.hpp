#pragma once

#include <stdexcept>
#include <string>

namespace tabprompt {

/// Raised for malformed or inconsistent input data (exit code 1 in the CLI).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a model backend fails (exit code 2 in the CLI).
class BackendError : public std::runtime_error {
 public:
  explicit BackendError(const std::string& what, int status = 0)
      : std::runtime_error(what), status_(status) {}

  /// HTTP status of the last attempt, or 0 for transport/parse failures.
  int status() const noexcept { return status_; }

 private:
  int status_;
};

}  // namespace tabprompt
