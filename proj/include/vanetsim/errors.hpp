#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vanetsim {

/// Bad or inconsistent configuration. The CLI maps it to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (FCD trace, obstacle map). `line` is 0 when unknown.
class ParseError : public ConfigError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : ConfigError(source + (line > 0 ? ":" + std::to_string(line) : std::string{}) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Failure while a run is in progress. The CLI maps it to exit code 2.
class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Query for an entity the simulation does not know about.
class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

}  // namespace vanetsim
