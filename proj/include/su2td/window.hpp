#pragma once

#include <cstddef>

namespace su2td {

/// Fractional bounds of the microcanonical window within one energy-ordered
/// eigenstate group.
struct WindowSpec {
  double f_lo = 0.40;
  double f_hi = 0.65;
};

struct IndexRange {
  std::size_t lo = 0;
  std::size_t hi = 0;
  std::size_t size() const { return hi - lo; }
};

/// Half-open index range [floor(f_lo*L), floor(f_hi*L)). Throws window_error
/// when the group is too small or the window holds fewer than 2 states.
IndexRange select_window(std::size_t group_size, const WindowSpec& spec);

}  // namespace su2td
