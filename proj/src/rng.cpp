#include "ysm/rng.hpp"

#include <cmath>

__extension__ typedef unsigned __int128 uint128_t;

namespace ysm {

namespace {

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
    const uint128_t p = static_cast<uint128_t>(a) * b;
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
}

inline RngStream::Block round(const RngStream::Block& c, const RngStream::Key& k) {
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

} // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) : key_{seed, stream_id} {}

RngStream::Block RngStream::philox_block(Block counter, Key key) {
    counter = round(counter, key);
    for (int r = 1; r < 10; ++r) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
        counter = round(counter, key);
    }
    return counter;
}

void RngStream::refill() {
    buffer_ = philox_block(counter_, key_);
    for (auto& word : counter_) {
        if (++word != 0) break;
    }
    position_ = 0;
}

RngStream::result_type RngStream::operator()() {
    if (position_ == 4) refill();
    return buffer_[position_++];
}

std::uint64_t RngStream::below(std::uint64_t n) {
    uint128_t m = static_cast<uint128_t>((*this)()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            m = static_cast<uint128_t>((*this)()) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

double RngStream::exponential(double mean) {
    // 1 - u lies in (0, 1], so the log is finite.
    return -mean * std::log1p(-uniform());
}

} // namespace ysm
