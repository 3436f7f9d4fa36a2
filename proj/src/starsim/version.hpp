#pragma once

namespace starsim {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace starsim
