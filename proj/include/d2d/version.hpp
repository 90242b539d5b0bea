#pragma once

namespace d2d {

const char* version_string();

}  // namespace d2d
