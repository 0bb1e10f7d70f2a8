#pragma once

#include <stdexcept>
#include <string>

namespace userboost {

// Malformed input data, numerical failure, or a violated precondition on data.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Bad configuration or call-site misuse (wrong shapes, invalid parameters).
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace userboost
