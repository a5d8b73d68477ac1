#pragma once

namespace segwave {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace segwave
