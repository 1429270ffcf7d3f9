#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

namespace tcbm {

/// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) return std::to_string(v);
    return {buf, end};
}

}  // namespace tcbm
