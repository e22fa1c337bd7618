#pragma once

namespace honesty {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace honesty
