#pragma once

#include <stdexcept>
#include <string>

namespace wbcr {

// Bad input content or configuration. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing/unreadable/unwritable files. Maps to CLI exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by the morphology routines when a sample cannot be measured
// (empty mask, flat luminance, empty cluster).
class MorphologyError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

inline std::string located(const std::string& file, std::size_t line, std::size_t column,
                           const std::string& what) {
  std::string out = file;
  if (line > 0) out += ":" + std::to_string(line);
  if (column > 0) out += ":" + std::to_string(column);
  return out + ": " + what;
}

}  // namespace wbcr
