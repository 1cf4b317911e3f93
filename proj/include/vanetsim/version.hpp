#pragma once

namespace vanetsim {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace vanetsim
