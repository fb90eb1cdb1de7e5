#pragma once

#include <stdexcept>
#include <string>

namespace fliptrees {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad user input: malformed config, invalid shape descriptor, unknown key.
// The CLI maps this to exit code 2.
struct ConfigError : Error {
  using Error::Error;
};

// A query or construction step that is not representable at the current
// truncation radii (out-of-window coordinate, unreachable component, empty
// core). Never a model bug; callers may retry with larger radii.
struct TruncationError : Error {
  using Error::Error;
};

// A certified structural property failed: quotient cycle, inconsistent
// identification, non-isometric image. Indicates a generator or model bug
// and is always fatal.
struct ModelViolation : Error {
  using Error::Error;
};

}  // namespace fliptrees
