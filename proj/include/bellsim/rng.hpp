#pragma once

// Counter-based random number generation built on Philox-4x32-10
// (Salmon, Moraes, Dror, Shaw, "Parallel random numbers: as easy as
// 1, 2, 3", SC'11). Every draw is addressed by (seed, trial, substream,
// block), so any single trial can be regenerated in O(1) and a run
// partitioned across any number of workers produces bitwise identical
// results.

#include <array>
#include <cstdint>

namespace bellsim {

namespace detail {

inline constexpr std::uint32_t philox_m0 = 0xD2511F53u;
inline constexpr std::uint32_t philox_m1 = 0xCD9E8D57u;
inline constexpr std::uint32_t philox_w0 = 0x9E3779B9u;
inline constexpr std::uint32_t philox_w1 = 0xBB67AE85u;

inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t(philox_m0) * ctr[0];
        const std::uint64_t p1 = std::uint64_t(philox_m1) * ctr[2];
        ctr = {std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0],
               std::uint32_t(p1),
               std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1],
               std::uint32_t(p0)};
        key[0] += philox_w0;
        key[1] += philox_w1;
    }
    return ctr;
}

} // namespace detail

/// Named lanes of randomness inside one trial. The layout is fixed so that
/// two models consuming the same lanes see identical draws under the same
/// seed, whatever else they do.
enum class Substream : std::uint32_t {
    setting_a = 0,
    setting_b = 1,
    outcome_a = 2,
    outcome_b = 3,
    thinning_a = 4,
    thinning_b = 5,
    hidden_variable = 6,
};

/// One addressed stream of pseudo-random numbers. Cheap to construct; no
/// state is shared between instances.
class PhiloxStream {
public:
    PhiloxStream(std::uint64_t seed, std::uint64_t trial, std::uint32_t substream)
        : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)},
          trial_lo_(std::uint32_t(trial)),
          trial_hi_(std::uint32_t(trial >> 32)),
          substream_(substream) {}

    PhiloxStream(std::uint64_t seed, std::uint64_t trial, Substream substream)
        : PhiloxStream(seed, trial, static_cast<std::uint32_t>(substream)) {}

    std::uint32_t next_u32() {
        if (cursor_ == 4) {
            block_ = detail::philox4x32({trial_lo_, trial_hi_, substream_, block_index_}, key_);
            ++block_index_;
            cursor_ = 0;
        }
        return block_[cursor_++];
    }

    /// Uniform double in [0, 1) with 53 random mantissa bits.
    double uniform01() {
        const std::uint64_t hi = next_u32() >> 5;  // 27 bits
        const std::uint64_t lo = next_u32() >> 6;  // 26 bits
        return double(hi * 67108864ULL + lo) * (1.0 / 9007199254740992.0);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Fair coin from the top bit of one 32-bit word.
    bool coin() { return (next_u32() >> 31) != 0; }

    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::array<std::uint32_t, 2> key_;
    std::uint32_t trial_lo_;
    std::uint32_t trial_hi_;
    std::uint32_t substream_;
    std::uint32_t block_index_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int cursor_ = 4;
};

inline PhiloxStream trial_stream(std::uint64_t seed, std::uint64_t trial, Substream s) {
    return PhiloxStream(seed, trial, s);
}

} // namespace bellsim
