#pragma once

namespace editdiff {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace editdiff
