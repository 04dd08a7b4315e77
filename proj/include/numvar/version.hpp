#pragma once

namespace nv {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace nv
