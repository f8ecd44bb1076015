#include <cmath>
#include <set>

#include "doctest.h"
#include "mwlil/rng.hpp"

using namespace mwlil;

TEST_CASE("philox4x32-10 known answers") {
    using A4 = std::array<std::uint32_t, 4>;
    using A2 = std::array<std::uint32_t, 2>;
    CHECK(philox4x32(A4{0, 0, 0, 0}, A2{0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, A2{0xffffffff, 0xffffffff}) ==
          A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, A2{0xa4093822, 0x299f31d0}) ==
          A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("identical seed and stream reproduce the sequence") {
    RngStream a(42, 0), b(42, 0);
    for (int i = 0; i < 1000; ++i) REQUIRE(a() == b());
    RngStream c(42, 0), d(42, 0);
    for (int i = 0; i < 1000; ++i) REQUIRE(c.uniform() == d.uniform());
}

TEST_CASE("distinct streams and seeds differ") {
    RngStream a(42, 0), b(42, 1), c(43, 0);
    int same_ab = 0, same_ac = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto x = a(), y = b(), z = c();
        same_ab += x == y;
        same_ac += x == z;
    }
    CHECK(same_ab == 0);
    CHECK(same_ac == 0);
}

TEST_CASE("uniform, bit and below stay in range with the right means") {
    RngStream r(7, 3);
    const int n = 200000;
    double sum = 0.0;
    int ones = 0;
    std::uint64_t below_sum = 0;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        ones += r.bit();
        const auto k = r.below(10);
        REQUIRE(k < 10);
        below_sum += k;
    }
    CHECK(std::abs(sum / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::abs(ones / double(n) - 0.5) < 4.0 * 0.5 / std::sqrt(double(n)));
    CHECK(std::abs(below_sum / double(n) - 4.5) < 4.0 * std::sqrt(8.25 / n));
}

TEST_CASE("lagged pairs are uncorrelated") {
    RngStream r(11, 0);
    const int n = 100000;
    double prev = r.uniform() - 0.5, acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform() - 0.5;
        acc += prev * u;
        prev = u;
    }
    // Var of a product of two centered uniforms is 1/144.
    CHECK(std::abs(acc / n) < 4.0 * std::sqrt(1.0 / 144.0 / n));
}
