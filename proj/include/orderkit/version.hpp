#pragma once

namespace orderkit {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace orderkit
