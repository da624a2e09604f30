#include <doctest.h>

#include "kslab/rng.hpp"

#include <cmath>
#include <set>

using namespace kslab;

TEST_CASE("philox4x32-10 known answers")
{
    // Published test vectors of the reference implementation.
    auto a = philox4x32_10({0, 0, 0, 0}, {0, 0});
    CHECK(a == Philox4x32Ctr{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    auto b = philox4x32_10({~0u, ~0u, ~0u, ~0u}, {~0u, ~0u});
    CHECK(b == Philox4x32Ctr{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    auto c = philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    CHECK(c == Philox4x32Ctr{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams are reproducible and distinct")
{
    Rng a(7, 3), b(7, 3), c(7, 4), d(8, 3);
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        CHECK(x == b.next_u64());
        CHECK(x != c.next_u64());
        CHECK(x != d.next_u64());
    }
}

TEST_CASE("uniform stays in the open interval and normal has unit variance")
{
    Rng r(1, 1);
    double s = 0, s2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        const double g = r.normal();
        s += g;
        s2 += g * g;
    }
    CHECK(std::abs(s / n) < 5 / std::sqrt(double(n)));
    CHECK(std::abs(s2 / n - 1) < 5 * std::sqrt(2.0 / n));
}

TEST_CASE("stream ids do not collide on small index grids")
{
    std::set<uint64_t> seen;
    for (uint64_t a = 0; a < 50; ++a)
        for (uint64_t b = 0; b < 50; ++b) seen.insert(stream_id(a, b));
    CHECK(seen.size() == 2500);
}
