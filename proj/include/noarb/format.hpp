#pragma once

#include <cstdio>
#include <string>

namespace noarb {

// Fixed 12-significant-digit rendering used by every CSV/JSON emitter.
inline std::string fmt12(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

} // namespace noarb
