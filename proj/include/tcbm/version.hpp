#pragma once

#include <string>

#ifndef TCBM_GIT_REVISION
#define TCBM_GIT_REVISION "unknown"
#endif

namespace tcbm {

inline constexpr const char* kVersion = "0.1.0";

inline std::string version_string() {
    return std::string(kVersion) + "+" + TCBM_GIT_REVISION;
}

}  // namespace tcbm
