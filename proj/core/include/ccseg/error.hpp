#pragma once

#include <stdexcept>
#include <string>

namespace ccseg {

// A caller broke an operation's precondition (bad shapes, empty inputs, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Inconsistent hyperparameters or geometry, e.g. a non-integral conv extent.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem or codec failures.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Weights file does not provide what the requested variant needs.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ccseg
