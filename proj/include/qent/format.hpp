#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

namespace qent {

/// Format with 12 significant digits, the project-wide precision for
/// reproducible text output.
inline std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

/// Round a double to 12 significant digits (used before JSON serialization
/// so emitted numbers match the textual precision contract).
inline double round12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return std::strtod(buf, nullptr);
}

}  // namespace qent
