#pragma once

#include <stdexcept>
#include <string>

namespace debias {

// User-facing configuration/validation failure; the CLI maps it to exit 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem/stream failure; the CLI maps it to exit 3.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace debias
