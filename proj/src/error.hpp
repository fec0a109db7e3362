#pragma once

#include <stdexcept>
#include <string>

namespace tipinet {

// Bad input data or out-of-contract argument.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad configuration (schema, scale maxima, option values).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss.
struct DivergedError : std::runtime_error {
  int epoch;
  DivergedError(int epoch_, const std::string& msg)
      : std::runtime_error(msg), epoch(epoch_) {}
};

}  // namespace tipinet
