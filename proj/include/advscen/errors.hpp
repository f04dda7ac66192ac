#pragma once

#include <stdexcept>
#include <string>

namespace advscen {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Inputs with inconsistent lengths or timesteps.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. `field` names the offending key/slot when known and
/// `line` is 1-based (0 when not applicable).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string field = {}, int line = 0)
      : Error(what), field_(std::move(field)), line_(line) {}
  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  std::string field_;
  int line_ = 0;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

class BackendError : public Error {
 public:
  using Error::Error;
};

class InstantiationError : public Error {
 public:
  using Error::Error;
};

class SpawnError : public Error {
 public:
  using Error::Error;
};

}  // namespace advscen
