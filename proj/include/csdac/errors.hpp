#pragma once

#include <stdexcept>

namespace csdac {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Inconsistent or invalid configuration (non-coherent tone, bad plan, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Inputs that fall outside the regime the models support, e.g. a timing
// offset of half a code period or more, or the equivalent model on a
// partially segmented converter.
class UnsupportedRegime : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace csdac
