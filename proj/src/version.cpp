#include "d2d/version.hpp"

#ifndef D2D_VERSION
#define D2D_VERSION "unknown"
#endif

namespace d2d {

const char* version_string() { return "d2d " D2D_VERSION; }

}  // namespace d2d
