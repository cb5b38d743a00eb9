#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wcv {

// Base of every exception thrown by the toolkit. The C API maps each
// subclass onto its own status code.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

class DimensionError : public Error {
public:
  using Error::Error;
};

class DuplicateIdError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

// Raised when a loss or parameter stops being finite during training.
class NumericError : public Error {
public:
  using Error::Error;
};

} // namespace wcv
