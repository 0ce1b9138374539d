#pragma once

namespace apnorm {

inline constexpr const char* version = "0.1.0";

}  // namespace apnorm
