#pragma once

#include <stdexcept>
#include <string>

namespace formbench {

/// Raised for malformed inputs, violated preconditions and I/O failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes a warning line to stderr. Thread-safe.
void warn(const std::string& message);

}  // namespace formbench
