#pragma once

#include <string>
#include <string_view>

namespace dale {

/// Fixed-point decimal formatting, rounding half away from zero.
/// format_fixed(230.125, 2) == "230.13" (subject to the binary value of the
/// input), format_fixed(-0.004, 2) == "0.00".
std::string format_fixed(double value, int decimals);

/// Shortest decimal string that round-trips to the same double.
std::string format_shortest(double value);

/// True when DALE_FORGE_LOG is set to a non-empty value.
bool log_enabled();

/// Writes one line to stderr when logging is enabled.
void log_line(std::string_view message);

} // namespace dale
