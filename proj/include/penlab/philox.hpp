#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace penlab {

/**
 * Philox4x32-10 counter-based generator (Salmon et al., SC'11). Output is a
 * pure function of (key, counter), so any draw can be recomputed without
 * replaying a stream.
 */
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    explicit Philox4x32(std::uint64_t seed)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}
    {
    }

    Counter operator()(Counter ctr) const
    {
        Key k = key_;
        for (int round = 0; round < 10; ++round) {
            ctr = single_round(ctr, k);
            k[0] += kWeyl0;
            k[1] += kWeyl1;
        }
        return ctr;
    }

    /// Standard normal draw addressed by two 64-bit coordinates.
    double normal(std::uint64_t a, std::uint64_t b) const
    {
        const Counter out = (*this)({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                                     static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)});
        const std::uint64_t w0 = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
        const std::uint64_t w1 = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
        // (0,1] and [0,1) with 53-bit resolution
        const double u1 = (static_cast<double>(w0 >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = static_cast<double>(w1 >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

    static Counter single_round(const Counter& c, const Key& k)
    {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }

    Key key_;
};

}  // namespace penlab
