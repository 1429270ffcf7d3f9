#pragma once

// Counter-based Gaussian stream.
//
// Philox4x32-10 (Salmon et al., SC'11) keyed by the master seed, with the
// 128-bit counter split into (draw block, sample index). Every increment of
// every Monte Carlo sample is addressable directly, so results never depend
// on how samples are scheduled across workers.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

namespace tcbm {

class Philox4x32 {
public:
    using counter_type = std::array<std::uint32_t, 4>;
    using key_type = std::array<std::uint32_t, 2>;

    static counter_type block(counter_type ctr, key_type key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kW0;
                key[1] += kW1;
            }
            ctr = one_round(ctr, key);
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;

    static counter_type one_round(const counter_type& c, const key_type& k) noexcept {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

/// Maps 64 random bits to a double strictly inside (0, 1).
inline double to_open_unit(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

/// Standard normal quantile.
inline double normal_quantile(double u) {
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

/// Random-access stream of uniforms/normals for one (master_seed, sample_index).
/// Draw j is a pure function of (master_seed, sample_index, j).
class GaussianStream {
public:
    GaussianStream(std::uint64_t master_seed, std::uint64_t sample_index) noexcept
        : key_{static_cast<std::uint32_t>(master_seed),
               static_cast<std::uint32_t>(master_seed >> 32)},
          sample_lo_(static_cast<std::uint32_t>(sample_index)),
          sample_hi_(static_cast<std::uint32_t>(sample_index >> 32)) {}

    double uniform(std::uint64_t index) const noexcept {
        const auto out = Philox4x32::block(counter(index / 2), key_);
        const std::size_t half = 2 * (index % 2);
        const std::uint64_t bits =
            (static_cast<std::uint64_t>(out[half]) << 32) | out[half + 1];
        return to_open_unit(bits);
    }

    double normal(std::uint64_t index) const { return normal_quantile(uniform(index)); }

    /// Fills `out` with normals for draw indices first, first+1, ...
    template <typename OutIt>
    void normals(std::uint64_t first, std::size_t count, OutIt out) const {
        std::uint64_t j = first;
        const std::uint64_t end = first + count;
        while (j < end) {
            const auto r = Philox4x32::block(counter(j / 2), key_);
            for (std::size_t half = j % 2; half < 2 && j < end; ++half, ++j) {
                const std::uint64_t bits =
                    (static_cast<std::uint64_t>(r[2 * half]) << 32) | r[2 * half + 1];
                *out++ = normal_quantile(to_open_unit(bits));
            }
        }
    }

private:
    Philox4x32::counter_type counter(std::uint64_t block_index) const noexcept {
        return {static_cast<std::uint32_t>(block_index),
                static_cast<std::uint32_t>(block_index >> 32), sample_lo_, sample_hi_};
    }

    Philox4x32::key_type key_;
    std::uint32_t sample_lo_;
    std::uint32_t sample_hi_;
};

}  // namespace tcbm
