#pragma once

#include <stdexcept>
#include <string>

namespace coriem {

/// Broad failure category; maps one-to-one onto C API status codes and CLI
/// exit codes.
enum class ErrorKind {
  Usage = 1,    // bad argument, invalid configuration, contract violation
  Data = 2,     // unreadable or malformed input, incompatible checkpoint
  Runtime = 3,  // numerical failure, divergence
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class RuntimeError : public Error {
 public:
  explicit RuntimeError(const std::string& what) : Error(ErrorKind::Runtime, what) {}
};

/// A point left the manifold, or a formula hit a singular configuration.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::Runtime, what) {}
};

class CurvatureMismatch : public Error {
 public:
  explicit CurvatureMismatch(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

}  // namespace coriem
