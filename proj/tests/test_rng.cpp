#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ysm/rng.hpp"

using ysm::RngStream;

TEST_CASE("Philox4x64-10 known answers") {
    using B = RngStream::Block;
    CHECK(RngStream::philox_block({0, 0, 0, 0}, {0, 0}) ==
          B{0x16554d9eca36314cULL, 0xdb20fe9d672d0fdcULL, 0xd7e772cee186176bULL, 0x7e68b68aec7ba23bULL});
    CHECK(RngStream::philox_block({0, 0, 0, 0}, {7, 3}) ==
          B{0xa1190e8c2941dfafULL, 0x7123ed095431578bULL, 0x9aa61d78ff08533bULL, 0x152dcf937105ea2dULL});
    CHECK(RngStream::philox_block({1, 0, 0, 0}, {7, 3}) ==
          B{0x7b6cc7b1862cc5f2ULL, 0xb960f2ea4b3f8d9fULL, 0x0cdd72e015deb1a6ULL, 0x50edb0d22a6a6fd5ULL});
}

TEST_CASE("stream output is the block sequence of its key") {
    RngStream rng(7, 3);
    const auto b0 = RngStream::philox_block({0, 0, 0, 0}, {7, 3});
    const auto b1 = RngStream::philox_block({1, 0, 0, 0}, {7, 3});
    for (auto w : b0) CHECK(rng() == w);
    for (auto w : b1) CHECK(rng() == w);
    CHECK(rng.blocks_generated() == 2);
    CHECK(rng.seed() == 7);
    CHECK(rng.stream_id() == 3);
}

TEST_CASE("identical keys reproduce, different keys diverge") {
    RngStream a(42, 1), b(42, 1), c(42, 2), d(43, 1);
    int same_c = 0, same_d = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto x = a();
        CHECK(x == b());
        same_c += x == c();
        same_d += x == d();
    }
    CHECK(same_c == 0);
    CHECK(same_d == 0);
    CHECK(ysm::derive_stream_id(3, 5) == ((3ULL << 32) | 5ULL));
}

TEST_CASE("uniform draws lie in [0, 1) with mean 1/2") {
    RngStream rng(1);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
    }
    CHECK(std::abs(sum / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("below(n) is uniform") {
    RngStream rng(9);
    const int k = 7, n = 70000;
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
        const auto v = rng.below(k);
        REQUIRE(v < static_cast<std::uint64_t>(k));
        ++counts[v];
    }
    double chi2 = 0.0;
    const double expected = static_cast<double>(n) / k;
    for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
    CHECK(chi2 < 22.46); // chi-square, 6 dof, p = 0.001
}

TEST_CASE("exponential draws have the requested mean") {
    RngStream rng(5);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = rng.exponential(2.0);
        CHECK(x >= 0.0);
        sum += x;
    }
    CHECK(std::abs(sum / n - 2.0) < 4.0 * 2.0 / std::sqrt(n));
}
