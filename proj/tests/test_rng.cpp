#include <array>
#include <cmath>
#include <cstdint>
#include <set>

#include <gtest/gtest.h>

#include <diagslice/rng.hpp>

using namespace diagslice;

// Known-answer vectors of the Random123 reference implementation.
TEST(Philox, KnownAnswerVectors) {
    using B = Philox4x64::block;
    using K = Philox4x64::key_type;
    EXPECT_EQ(Philox4x64::encrypt(B{0, 0, 0, 0}, K{0, 0}),
              (B{0x16554d9eca36314cULL, 0xdb20fe9d672d0fdcULL, 0xd7e772cee186176bULL,
                 0x7e68b68aec7ba23bULL}));
    const std::uint64_t m = ~0ULL;
    EXPECT_EQ(Philox4x64::encrypt(B{m, m, m, m}, K{m, m}),
              (B{0x87b092c3013fe90bULL, 0x438c3c67be8d0224ULL, 0x9cc7d7c69cd777b6ULL,
                 0xa09caebf594f0ba0ULL}));
    EXPECT_EQ(Philox4x64::encrypt(B{0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL,
                                    0xa4093822299f31d0ULL, 0x082efa98ec4e6c89ULL},
                                  K{0x452821e638d01377ULL, 0xbe5466cf34e90c6cULL}),
              (B{0xa528f45403e61d95ULL, 0x38c72dbd566e9788ULL, 0xa5a1610e72fd18b5ULL,
                 0x57bd43b5e52b7fe6ULL}));
}

// Streams produced by numpy.random.Philox(key=[master, stream]) started at counter 0.
TEST(Philox, StreamMatchesNumpy) {
    const std::array<std::uint64_t, 8> s00{
        0x16554D9ECA36314CULL, 0xDB20FE9D672D0FDCULL, 0xD7E772CEE186176BULL, 0x7E68B68AEC7BA23BULL,
        0x02F4BA6408E4D89BULL, 0x3DD62B0B9CA8C5B2ULL, 0x1C8667A55D902E79ULL, 0x907D7A052FD5B4DCULL};
    const std::array<std::uint64_t, 8> s12345_7{
        0x18DD2BB7DE3D0FCCULL, 0x90B41CF52F2EDACCULL, 0x6D0946443DF56F31ULL, 0xA2E48C492D5CF5FAULL,
        0x0A6EFFE13FB51D09ULL, 0x550D7FF1E9B79C89ULL, 0x5B961D1C4DB72C59ULL, 0x5881711DC14B2D09ULL};
    Philox4x64 a(RngSpec{0, 0});
    for (auto v : s00) EXPECT_EQ(a(), v);
    Philox4x64 b(RngSpec{12345, 7});
    for (auto v : s12345_7) EXPECT_EQ(b(), v);
}

TEST(Rng, SameSpecReplaysBitForBit) {
    Rng a(RngSpec{42, 3});
    Rng b(RngSpec{42, 3});
    for (int i = 0; i < 1000; ++i) {
        EXPECT_EQ(a.uniform(), b.uniform());
        EXPECT_EQ(a.normal(), b.normal());
    }
}

TEST(Rng, DistinctStreamsDiffer) {
    std::set<std::uint64_t> first;
    for (std::uint64_t m = 0; m < 20; ++m)
        for (std::uint64_t s = 0; s < 20; ++s) first.insert(Rng(RngSpec{m, s}).bits());
    EXPECT_EQ(first.size(), 400u);
}

TEST(Rng, UniformIsInUnitIntervalWithCorrectMoments) {
    Rng r(RngSpec{7, 0});
    const int n = 1000000;
    double s = 0.0;
    double s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        s += u;
        s2 += u * u;
    }
    const double se = std::sqrt(1.0 / 12.0 / n);
    EXPECT_NEAR(s / n, 0.5, 4 * se);
    EXPECT_NEAR(s2 / n, 1.0 / 3.0, 4 * std::sqrt(4.0 / 45.0 / n));
}

TEST(Rng, NormalMoments) {
    Rng r(RngSpec{9, 1});
    const int n = 1000000;
    double s = 0.0;
    double s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        s += z;
        s2 += z * z;
    }
    EXPECT_NEAR(s / n, 0.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(Rng, DerivedSeedsAreDistinct) {
    std::set<std::uint64_t> seeds;
    for (std::uint64_t m = 0; m < 50; ++m)
        for (std::uint64_t t = 0; t < 50; ++t) seeds.insert(derive_seed(m, t));
    EXPECT_EQ(seeds.size(), 2500u);
    EXPECT_NE(derive_seed(1, 2), derive_seed(2, 1));
}
