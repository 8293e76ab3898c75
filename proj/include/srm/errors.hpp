#pragma once

#include <stdexcept>
#include <string>

namespace srm {

// Invalid construction parameters (spectrum levels, config values).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed or empty input data.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation would exceed its enumeration budget.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Training diverged (parameters or losses left the finite range).
class InstabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape mismatch between cooperating components; a programming error.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Dataset or data-file problem; `kind` separates the load failure modes.
class DatasetError : public std::runtime_error {
 public:
  enum class Kind { Format, Version, Truncated, Consistency, TooShort };

  DatasetError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace srm
