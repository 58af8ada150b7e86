#pragma once

namespace vpstab {
inline constexpr const char* kVersion = "0.1.0";
}
