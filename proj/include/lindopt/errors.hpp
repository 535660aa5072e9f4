#pragma once

#include <stdexcept>
#include <string>

namespace lindopt {

// Thrown for invalid run configurations (CLI exit code 2).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown for numeric failures: non-CP inputs, degenerate objectives,
// rank-deficient retractions (CLI exit code 3).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown for filesystem failures (CLI exit code 4).
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lindopt
