#pragma once

namespace flowgrade {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace flowgrade
