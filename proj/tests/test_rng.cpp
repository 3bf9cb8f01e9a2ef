#include "gasrl/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace gasrl;

TEST_CASE("philox4x32-10 known-answer vectors") {
    using A4 = std::array<std::uint32_t, 4>;
    CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
          A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("every draw consumes one counter") {
    CounterRng rng(42);
    rng.uniform();
    rng.normal();
    rng.below(7);
    CHECK(rng.state().counter == 3);
}

TEST_CASE("state round-trip reproduces the stream") {
    CounterRng a(9);
    for (int i = 0; i < 10; ++i) a.normal();
    CounterRng b(a.state());
    for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
}

TEST_CASE("uniform ranges") {
    CounterRng rng(1);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double v = rng.uniform_open_low();
        CHECK(v > 0.0);
        CHECK(v <= 1.0);
        CHECK(rng.below(5) < 5u);
    }
}

TEST_CASE("normal moments") {
    CounterRng rng(2024);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s += z;
        s2 += z * z;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(n));
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("derive_seed separates labels and indices") {
    CHECK(derive_seed(1, "episode", 0) != derive_seed(1, "episode", 1));
    CHECK(derive_seed(1, "episode", 0) != derive_seed(1, "eval", 0));
    CHECK(derive_seed(1, "episode", 0) != derive_seed(2, "episode", 0));
    CHECK(derive_seed(5, "x", 3) == derive_seed(5, "x", 3));
}
