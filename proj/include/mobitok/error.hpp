#ifndef MOBITOK_ERROR_HPP
#define MOBITOK_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mobitok {

// Base class for all pipeline errors. The message carries a "[module]" tag
// so the CLI can print a diagnostic that names the failing stage.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration or invalid input declaration (bad parameter value,
// unknown format, missing file). Maps to exit code 2 in the CLI.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Malformed or inconsistent data encountered at runtime. Maps to exit code 1.
class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(msg) {}
};

}  // namespace mobitok

#endif  // MOBITOK_ERROR_HPP
