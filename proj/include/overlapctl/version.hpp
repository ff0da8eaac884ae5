#pragma once

namespace overlapctl {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace overlapctl
