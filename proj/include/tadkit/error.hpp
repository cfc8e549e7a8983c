#pragma once

#include <stdexcept>
#include <string>

namespace tadkit {

// Runtime failure: bad data, I/O trouble, diverged training. CLI exit code 2.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid configuration or schema violation. CLI exit code 1; the message
// names the offending field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tadkit
