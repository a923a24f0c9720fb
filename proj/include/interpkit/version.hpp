#pragma once

namespace interpkit {
inline constexpr const char* version = "0.1.0";
}
