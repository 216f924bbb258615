#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rpg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OversizeContext : public Error {
 public:
  OversizeContext(std::size_t length, std::size_t cap)
      : Error("linearized context has " + std::to_string(length) +
              " tokens, cap is " + std::to_string(cap)),
        length_(length),
        cap_(cap) {}
  std::size_t length() const { return length_; }
  std::size_t cap() const { return cap_; }

 private:
  std::size_t length_;
  std::size_t cap_;
};

class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& what, std::size_t offset)
      : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class ArityError : public Error {
 public:
  using Error::Error;
};

class MalformedSequence : public Error {
 public:
  using Error::Error;
};

class ClosedSession : public Error {
 public:
  ClosedSession() : Error("legality session is closed") {}
};

class IllegalToken : public Error {
 public:
  using Error::Error;
};

// Execution failures. Callers treat these as "no answer".
class ExecutionError : public Error {
 public:
  using Error::Error;
};

class DivisionByZero : public ExecutionError {
 public:
  using ExecutionError::ExecutionError;
};

class NonNumericCell : public ExecutionError {
 public:
  using ExecutionError::ExecutionError;
};

class RangeError : public ExecutionError {
 public:
  using ExecutionError::ExecutionError;
};

class SchemaError : public Error {
 public:
  SchemaError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace rpg
