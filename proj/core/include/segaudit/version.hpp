#pragma once

namespace segaudit {

inline constexpr const char* kToolName = "segaudit";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace segaudit
