#include <doctest.h>

#include <array>

#include "actseq/rng.hpp"

using namespace actseq;

TEST_CASE("splitmix64 matches the published reference outputs") {
    // First outputs of the reference splitmix64 stream seeded with 0.
    SplitMix64 rng(0);
    CHECK(rng.next() == 0xE220A8397B1DCDAFull);
    CHECK(rng.next() == 0x6E789E6AA1B965F4ull);
    CHECK(rng.next() == 0x06C45D188009454Full);
    CHECK(rng.next() == 0xF88BB8A8724C81ECull);
    CHECK(rng.next() == 0x1B39896A51A8749Bull);

    SplitMix64 rng2(1234567);
    CHECK(rng2.next() == 0x599ED017FB08FC85ull);
    CHECK(rng2.next() == 0x2C73F08458540FA5ull);
    CHECK(rng2.next() == 0x883EBCE5A3F27C77ull);
}

TEST_CASE("child_seed equals the (j+1)-th stream output") {
    for (std::uint64_t seed : {0ull, 42ull, 0xDEADBEEFull}) {
        SplitMix64 stream(seed);
        for (std::uint64_t j = 0; j < 8; ++j) {
            CHECK(child_seed(seed, j) == stream.next());
        }
    }
}

TEST_CASE("next_double is in [0,1) and reproducible") {
    SplitMix64 rng(0);
    const double first = rng.next_double();
    CHECK(first == doctest::Approx(0.8833108082136426).epsilon(1e-15));
    SplitMix64 rng2(99);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng2.next_double();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("sample_categorical walks the cumulative distribution") {
    const std::array<double, 3> p = {0.2, 0.5, 0.3};
    CHECK(sample_categorical(p, 0.0) == 0);
    CHECK(sample_categorical(p, 0.1999) == 0);
    CHECK(sample_categorical(p, 0.2001) == 1);
    CHECK(sample_categorical(p, 0.6999) == 1);
    CHECK(sample_categorical(p, 0.7001) == 2);
    CHECK(sample_categorical(p, 0.999999) == 2);

    // Rounding can leave u at or past the accumulated total; the draw must
    // land on a state with positive mass.
    const std::array<double, 3> q = {0.5, 0.5, 0.0};
    CHECK(sample_categorical(q, 0.9999999999999999) == 1);
}
