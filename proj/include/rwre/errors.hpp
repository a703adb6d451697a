#pragma once

#include <stdexcept>
#include <string>

namespace rwre {

/// Invalid parameters or configuration (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Bad call arguments: empty sequences, ordering violations.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Index or coverage outside what an environment/path provides.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Function evaluated outside its mathematical domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The run would exceed the configured event budget (CLI exit code 3).
class BudgetError : public std::runtime_error {
 public:
  BudgetError(const std::string& what, double estimate)
      : std::runtime_error(what), estimate_(estimate) {}
  double estimate() const noexcept { return estimate_; }

 private:
  double estimate_;
};

}  // namespace rwre
