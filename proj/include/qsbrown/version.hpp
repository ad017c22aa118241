#pragma once

namespace qsb {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace qsb
