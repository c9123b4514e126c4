#pragma once

#include <stdexcept>
#include <string>

namespace sqdecomp {

/// Bad or unreadable input data (mesh files, tree documents).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration values or parameter specifications.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical invariant broke (non-finite gradient and the like).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sqdecomp
