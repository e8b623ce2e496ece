#pragma once

#include <stdexcept>
#include <string>

namespace biosearch {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A record or request could not be parsed. `field()` names the offending
/// field when one can be identified.
class ParseError : public Error {
 public:
  ParseError(std::string field, const std::string& message)
      : Error(field.empty() ? message : "field '" + field + "': " + message),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class DuplicateError : public Error {
 public:
  using Error::Error;
};

/// An index could not be built from its inputs.
class BuildError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// Index or export file has an unexpected layout or format version.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class EmptyQueryError : public Error {
 public:
  EmptyQueryError() : Error("query is empty") {}
};

/// Failure talking to an external plugin service.
class PluginError : public Error {
 public:
  using Error::Error;
};

}  // namespace biosearch
