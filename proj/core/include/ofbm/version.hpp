#pragma once

namespace ofbm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ofbm
