#pragma once

namespace hct {

inline constexpr const char* kVersion = "1.0.0";

} // namespace hct
