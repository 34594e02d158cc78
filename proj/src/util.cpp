#include "dale/util.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <iostream>

namespace dale {

std::string format_fixed(double value, int decimals) {
    std::int64_t scale = 1;
    for (int i = 0; i < decimals; ++i) scale *= 10;
    // llround rounds halfway cases away from zero.
    std::int64_t n = std::llround(value * static_cast<double>(scale));
    bool negative = n < 0;
    std::uint64_t magnitude = negative ? static_cast<std::uint64_t>(-n) : static_cast<std::uint64_t>(n);
    if (magnitude == 0) negative = false; // avoid "-0.00"
    std::string out = negative ? "-" : "";
    out += std::to_string(magnitude / static_cast<std::uint64_t>(scale));
    if (decimals > 0) {
        std::string frac = std::to_string(magnitude % static_cast<std::uint64_t>(scale));
        out += '.';
        out += std::string(static_cast<std::size_t>(decimals) - frac.size(), '0');
        out += frac;
    }
    return out;
}

std::string format_shortest(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

bool log_enabled() {
    const char* env = std::getenv("DALE_FORGE_LOG");
    return env != nullptr && env[0] != '\0';
}

void log_line(std::string_view message) {
    if (log_enabled()) std::cerr << "[dale_forge] " << message << '\n';
}

} // namespace dale
