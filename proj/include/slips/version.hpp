#pragma once

namespace slips {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace slips
