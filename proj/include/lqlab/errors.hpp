#ifndef LQLAB_ERRORS_HPP
#define LQLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace lqlab {

// Bad or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable/unwritable files and malformed persisted artifacts (exit code 3).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numeric or contract violations detected at runtime (exit code 4).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lqlab

#endif  // LQLAB_ERRORS_HPP
