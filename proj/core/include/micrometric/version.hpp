#pragma once

namespace micrometric {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace micrometric
