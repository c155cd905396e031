#pragma once

#include <stdexcept>
#include <string>

namespace vdn {

// Shapes or wiring that cannot be made consistent.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Calling an operation out of order (missing cache, stepping a finished episode, ...).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Non-finite values showed up during training.
class TrainingFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vdn
