#pragma once

#include <stdexcept>
#include <string>

namespace nightwatch {

/// Base error for all nightwatch failures.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad or inconsistent on-disk data (frame containers, model files, JSONL inputs).
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(what) {}
};

/// Invalid configuration or parameter values.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace nightwatch
