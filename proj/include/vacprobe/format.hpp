#pragma once

#include <cstdio>
#include <string>

namespace vacprobe {

/// Fixed 12-significant-digit rendering used by every tabular output.
inline std::string format_number(double x) {
  if (x == 0.0) x = 0.0;  // drop the sign of -0
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

}  // namespace vacprobe
