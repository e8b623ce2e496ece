#pragma once

namespace biosearch {

inline constexpr const char* kEngineVersion = "0.3.0";

}  // namespace biosearch
