#pragma once

#include <span>

#include "epirecon/error.hpp"

namespace epirecon::deconv {

// Ratio mean(b) / mean(a) over the window_days days starting at
// window_center - window_days / 2; the factor that scales a onto b.
inline double scale_match(std::span<const double> a, std::span<const double> b, long window_center,
                          long window_days) {
  if (window_days < 1) throw ParameterError("scale_match: window must have at least one day");
  const long first = window_center - window_days / 2;
  const long last = first + window_days;
  if (first < 0 || last > static_cast<long>(a.size()) || last > static_cast<long>(b.size())) {
    throw InputError("scale_match: window not covered by both series");
  }
  double sa = 0.0, sb = 0.0;
  for (long i = first; i < last; ++i) {
    sa += a[static_cast<std::size_t>(i)];
    sb += b[static_cast<std::size_t>(i)];
  }
  if (sa == 0.0) throw InputError("scale_match: zero mean in the reference window");
  return sb / sa;
}

}  // namespace epirecon::deconv
