#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace strokenet {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input bytes. Carries the byte offset where parsing stopped.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t byte_offset)
      : Error(msg), byte_offset_(byte_offset) {}
  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

// Violated precondition or schema rule on otherwise well-formed data.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Tensor shape mismatch; message names the op and the offending shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Incompatible configuration, e.g. checkpoint/config hash mismatch.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace strokenet
