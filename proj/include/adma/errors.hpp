#pragma once

#include <stdexcept>
#include <string>

namespace adma {

// Bad inputs: malformed config, dimension mismatches, values outside their
// documented domain. CLI maps this to exit code 1.
class validation_error : public std::invalid_argument {
 public:
  explicit validation_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Arithmetic degeneracy detected at runtime: predictive variance under the
// floor, all-zero mixture mass, non-finite state. CLI maps this to exit code 2.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace adma
