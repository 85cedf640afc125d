#pragma once

#include <stdexcept>

namespace segaudit {

/// Bad inputs, violated preconditions, malformed configuration. CLI exit 1.
struct validation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Filesystem and format failures. CLI exit 2.
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace segaudit
