#include "formbench/error.hpp"

#include <iostream>
#include <mutex>

namespace formbench {

void warn(const std::string& message) {
  static std::mutex mutex;
  std::lock_guard lock(mutex);
  std::cerr << "formbench: warning: " << message << '\n';
}

}  // namespace formbench
