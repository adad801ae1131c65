#pragma once

#include <stdexcept>
#include <string>

namespace chdqn {

// Invalid configuration: bad dimensions, unknown ids, inconsistent options.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside a mathematical domain (e.g. |x| > 1 for a Chebyshev input).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// API misuse: calls made in the wrong state or order.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed data such as non-finite observations or unparsable files.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace chdqn
