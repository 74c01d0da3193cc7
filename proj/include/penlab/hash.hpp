#pragma once

#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>

namespace penlab {

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL)
{
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string fnv1a_hex(std::string_view s) { return hex64(fnv1a64(s)); }

/// Round-trip decimal form (%.17g), used for every serialized number.
inline std::string fmt_exact(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string hash_values(std::span<const double> values)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : values) {
        h = fnv1a64(fmt_exact(v), h);
        h = fnv1a64(",", h);
    }
    return hex64(h);
}

}  // namespace penlab
