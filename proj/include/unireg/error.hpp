#ifndef UNIREG_ERROR_HPP_
#define UNIREG_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace unireg {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Input outside the mathematical domain of an operation (log of a
// non-positive value, reduction of an empty tensor, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Caller broke a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration. key() carries the offending dotted key path when
// one is known.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message, std::string key = {})
      : Error(key.empty() ? message : key + ": " + message),
        key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// Malformed file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf produced at an op boundary.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace unireg

#endif  // UNIREG_ERROR_HPP_
