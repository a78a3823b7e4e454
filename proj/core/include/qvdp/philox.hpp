#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Each
// (key, counter) pair maps to four independent 32-bit words, so streams can be
// indexed by trajectory and step without shared state.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace qvdp {

class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    explicit constexpr Philox4x32(Key key) : key_(key) {}
    explicit constexpr Philox4x32(std::uint64_t seed)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}
    {
    }

    constexpr Counter operator()(Counter ctr) const
    {
        Key k = key_;
        for (int r = 0; r < 10; ++r) {
            if (r > 0) {
                k[0] += 0x9E3779B9u;
                k[1] += 0xBB67AE85u;
            }
            const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ k[0], lo1, hi0 ^ ctr[3] ^ k[1], lo0};
        }
        return ctr;
    }

    /// Uniform in the open interval (0, 1).
    static constexpr double to_unit(std::uint32_t u) { return (static_cast<double>(u) + 0.5) * 0x1p-32; }

    /// Four standard normals from one counter via two Box-Muller pairs.
    std::array<double, 4> normals(Counter ctr) const
    {
        const Counter r = (*this)(ctr);
        std::array<double, 4> out{};
        for (int k = 0; k < 2; ++k) {
            const double rad = std::sqrt(-2.0 * std::log(to_unit(r[2 * k])));
            const double th = 2.0 * std::numbers::pi * to_unit(r[2 * k + 1]);
            out[2 * k] = rad * std::cos(th);
            out[2 * k + 1] = rad * std::sin(th);
        }
        return out;
    }

    std::array<double, 4> uniforms(Counter ctr) const
    {
        const Counter r = (*this)(ctr);
        return {to_unit(r[0]), to_unit(r[1]), to_unit(r[2]), to_unit(r[3])};
    }

private:
    Key key_;
};

}  // namespace qvdp
