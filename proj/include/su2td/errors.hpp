#pragma once

#include <stdexcept>
#include <string>

namespace su2td {

/// Bad arguments or malformed configuration. CLI exit code 2.
struct argument_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Sector dimension exceeds the configured limit. CLI exit code 3.
struct capacity_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A proven inequality or structural identity failed at runtime. CLI exit code 1.
struct property_violation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Eigensolver failure or other numerical breakdown.
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Spin labels could not be assigned within tolerance even after cluster repair.
struct labeling_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Microcanonical window too small for the group; the sector is skipped.
struct window_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Cache file corruption (bad magic, truncation, checksum mismatch).
struct integrity_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input file (CSV schema mismatch and the like).
struct format_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace su2td
