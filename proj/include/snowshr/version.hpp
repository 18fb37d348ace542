#pragma once

namespace snowshr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace snowshr
