#pragma once

#include <stdexcept>

namespace bb {

// Error families map onto the CLI exit codes: config 2, data 3, numeric 4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A prototype target is not warmed up yet; callers normally skip the term.
struct NotReadyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace bb
