#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace ysm {

// Philox4x64-10 counter-based generator (Salmon, Moraes, Dror, Shaw 2011).
//
// A stream is the pair (seed, stream_id), used as the 128-bit Philox key; the
// 256-bit block counter starts at zero. Distinct keys give statistically
// independent streams, so a run's trajectory depends only on its own key and
// never on how many other runs were scheduled before it.
class RngStream {
public:
    using result_type = std::uint64_t;
    using Block = std::array<std::uint64_t, 4>;
    using Key = std::array<std::uint64_t, 2>;

    explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    // 53-bit uniform in [0, 1).
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n) by Lemire's multiply-and-reject. n must be > 0.
    std::uint64_t below(std::uint64_t n);

    bool bernoulli(double p) { return uniform() < p; }

    double exponential(double mean);

    [[nodiscard]] std::uint64_t seed() const { return key_[0]; }
    [[nodiscard]] std::uint64_t stream_id() const { return key_[1]; }
    [[nodiscard]] std::uint64_t blocks_generated() const { return counter_[0]; }

    // One Philox4x64-10 block; exposed for known-answer tests.
    static Block philox_block(Block counter, Key key);

private:
    void refill();

    Key key_;
    Block counter_{};
    Block buffer_{};
    unsigned position_ = 4;
};

// Stream id for job `index` of sweep cell `cell`; keeps every job on its own key.
constexpr std::uint64_t derive_stream_id(std::uint64_t cell, std::uint64_t index) {
    return (cell << 32) | (index & 0xffffffffULL);
}

} // namespace ysm
