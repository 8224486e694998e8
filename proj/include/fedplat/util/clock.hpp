#pragma once

#include <chrono>
#include <string>

namespace fedplat::util {

using SteadyClock = std::chrono::steady_clock;
using WallClock = std::chrono::system_clock;

// "2024-05-01T12:30:05.123Z"
std::string format_utc(WallClock::time_point t);
std::string now_utc();

// Parses the format produced by format_utc. Throws std::invalid_argument.
WallClock::time_point parse_utc(const std::string& text);

inline std::chrono::milliseconds seconds_to_ms(double seconds) {
  return std::chrono::milliseconds(static_cast<long long>(seconds * 1000.0 + 0.5));
}

}  // namespace fedplat::util
