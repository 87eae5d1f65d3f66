#pragma once

namespace promnet {

inline constexpr const char* kEngineVersion = "0.1.0";

}  // namespace promnet
