#pragma once

#include <stdexcept>
#include <string>

namespace vickrey {

enum class ErrorKind {
  parse,       // malformed input record
  validation,  // well-formed input that violates a type invariant
  argument,    // bad argument to an operation (arity, range, ...)
  input,       // bad data handed to an operation (OOV token, invalid UTF-8)
  config,      // bad configuration file or judge setup
  training,    // non-finite loss during optimisation
  invariant,   // internal consistency check failed
  io,          // file could not be opened, read or written
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace vickrey
