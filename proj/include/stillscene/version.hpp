#pragma once

namespace stillscene {

inline constexpr const char* kVersion = "stillscene 0.1.0";

}  // namespace stillscene
