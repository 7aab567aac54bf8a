#include "su2td/window.hpp"

#include <cmath>
#include <string>

#include "su2td/errors.hpp"

namespace su2td {

IndexRange select_window(std::size_t group_size, const WindowSpec& spec) {
  if (!(spec.f_lo >= 0.0) || !(spec.f_hi <= 1.0) || !(spec.f_lo < spec.f_hi)) {
    throw argument_error("select_window: need 0 <= f_lo < f_hi <= 1");
  }
  const double L = static_cast<double>(group_size);
  const auto lo = static_cast<std::size_t>(std::floor(spec.f_lo * L));
  const auto hi = static_cast<std::size_t>(std::floor(spec.f_hi * L));
  if (hi <= lo + 1) {
    throw window_error("select_window: group of " + std::to_string(group_size) +
                       " states leaves fewer than 2 in the window");
  }
  return IndexRange{lo, hi};
}

}  // namespace su2td
