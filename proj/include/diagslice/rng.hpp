#pragma once

// Counter-based random numbers. Every (master_seed, stream_id) pair keys an
// independent Philox4x64-10 stream (Salmon et al., SC'11), so repetition i of
// an experiment always sees the same numbers no matter which thread runs it.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace diagslice {

struct RngSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_id = 0;

    friend bool operator==(const RngSpec&, const RngSpec&) = default;
};

/// splitmix64 finaliser; used to derive child seeds from a master seed.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seed for a named sub-experiment (tag) of a master seed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) noexcept {
    return mix64(mix64(master) ^ mix64(tag + 0x632BE59BD9B4E019ULL));
}

class Philox4x64 {
public:
    using result_type = std::uint64_t;
    using block = std::array<std::uint64_t, 4>;
    using key_type = std::array<std::uint64_t, 2>;

    explicit Philox4x64(RngSpec spec) noexcept : key_{spec.master_seed, spec.stream_id} {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept {
        if (pos_ == 4) {
            buf_ = encrypt(counter_, key_);
            increment();
            pos_ = 0;
        }
        return buf_[pos_++];
    }

    /// The 10-round Philox bijection on one counter block.
    static block encrypt(block ctr, key_type key) noexcept {
        constexpr std::uint64_t m0 = 0xD2E7470EE14C6C93ULL;
        constexpr std::uint64_t m1 = 0xCA5A826395121157ULL;
        constexpr std::uint64_t w0 = 0x9E3779B97F4A7C15ULL;
        constexpr std::uint64_t w1 = 0xBB67AE8584CAA73BULL;
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += w0;
                key[1] += w1;
            }
            const unsigned __int128 p0 = static_cast<unsigned __int128>(m0) * ctr[0];
            const unsigned __int128 p1 = static_cast<unsigned __int128>(m1) * ctr[2];
            const auto hi0 = static_cast<std::uint64_t>(p0 >> 64);
            const auto lo0 = static_cast<std::uint64_t>(p0);
            const auto hi1 = static_cast<std::uint64_t>(p1 >> 64);
            const auto lo1 = static_cast<std::uint64_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

private:
    void increment() noexcept {
        for (auto& c : counter_)
            if (++c != 0) break;
    }

    key_type key_;
    block counter_{0, 0, 0, 0};
    block buf_{};
    int pos_ = 4;
};

/// Uniform doubles and standard normals on top of a Philox stream. The
/// transforms are written out here rather than taken from <random> so that the
/// produced values do not depend on the standard library implementation.
class Rng {
public:
    explicit Rng(RngSpec spec) noexcept : engine_(spec) {}

    /// Uniform on [0,1) with 53 random bits.
    double uniform() noexcept {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Box-Muller; the second variate of each pair is cached.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform(); // (0,1]
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    std::uint64_t bits() noexcept { return engine_(); }

private:
    Philox4x64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace diagslice
