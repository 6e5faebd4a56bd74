#pragma once

#include <stdexcept>
#include <string>

namespace sublin {

/// Raised when a caller breaks an operation's precondition (bad index,
/// non-canonical edge, invalid instance data).
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

/// Raised when estimator parameters cannot satisfy the conditions an
/// algorithm needs; always thrown before any oracle query is made.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace sublin
