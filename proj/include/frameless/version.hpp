#pragma once

namespace frameless {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace frameless
