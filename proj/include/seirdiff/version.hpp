#pragma once

namespace seirdiff {

inline constexpr const char* version = "0.1.0";

} // namespace seirdiff
