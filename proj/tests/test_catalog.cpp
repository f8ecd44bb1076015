#include <cmath>

#include "doctest.h"
#include "mwlil/catalog.hpp"
#include "mwlil/path.hpp"

using namespace mwlil;

TEST_CASE("catalog specs parse and print") {
    const FunctionalSpec a = parse_functional_spec("singular_sin(0.45)");
    CHECK(a.name == "singular_sin");
    CHECK(a.alpha == 0.45);
    CHECK(to_string(a) == "singular_sin(0.45)");
    const FunctionalSpec b = parse_functional_spec("lebesgue_linear(2,2)");
    CHECK(b.q == 2.0);
    CHECK(b.terms_K == 2);
    CHECK(parse_functional_spec(to_string(b)) == b);
    CHECK(parse_functional_spec("cos2pi").name == "cos2pi");
    CHECK_THROWS_AS(parse_functional_spec("tanh"), std::invalid_argument);
    CHECK_THROWS_AS(parse_functional_spec("singular_sin(0.3"), std::invalid_argument);
    CHECK_THROWS_AS(parse_functional_spec("singular_sin(0.3,1)"), std::invalid_argument);
}

TEST_CASE("catalog entries live on their chain") {
    CHECK_THROWS_AS(make_functional(parse_functional_spec("cos2pi"), ChainSpec::lebesgue(2)),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_functional(parse_functional_spec("lebesgue_linear(2)"), ChainSpec::bernoulli()),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_functional(parse_functional_spec("lebesgue_linear(2,5)"), ChainSpec::lebesgue(3)),
                    std::invalid_argument);
    CHECK_THROWS_AS(singular_sin(0.5), std::invalid_argument);
    CHECK_THROWS_AS(singular_sin(0.0), std::invalid_argument);
    CHECK(make_functional(parse_functional_spec("zero"), ChainSpec::lebesgue(2)).is_zero());
}

TEST_CASE("singular_sin centering and second moment match high-precision references") {
    // Reference values from mpmath.quadosc on int_1^inf t^(a-2) sin t dt and
    // int_1^inf t^(2a-2) sin^2 t dt at 30 digits.
    struct Ref {
        double alpha, mean, variance;
    };
    for (const Ref r : {Ref{0.3, 0.54509145132499334182, 1.1500837259729637884},
                        Ref{0.45, 0.56502214946645024234, 4.8888942462804302866}}) {
        CHECK(singular_sin_mean(r.alpha) == doctest::Approx(r.mean).epsilon(1e-10));
        const Functional g = singular_sin(r.alpha);
        CHECK(g.centering() == doctest::Approx(r.mean).epsilon(1e-10));
        REQUIRE(g.traits().second_moment);
        CHECK(*g.traits().second_moment == doctest::Approx(r.variance).epsilon(1e-9));
    }
}

TEST_CASE("singular_sin cell integrals add up and match direct quadrature away from 0") {
    const double alpha = 0.3;
    // Direct composite Simpson on [0.25, 0.5], where the integrand is smooth.
    auto f = [&](double x) { return std::pow(x, -alpha) * std::sin(1.0 / x); };
    const int m = 20000;
    const double a = 0.25, b = 0.5, h = (b - a) / m;
    double s = f(a) + f(b);
    for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    CHECK(singular_sin_integral(alpha, a, b) == doctest::Approx(s * h / 3.0).epsilon(1e-11));
    const double whole = singular_sin_integral(alpha, 0.0, 1.0);
    const double split = singular_sin_integral(alpha, 0.0, 0.001) + singular_sin_integral(alpha, 0.001, 0.3) +
                         singular_sin_integral(alpha, 0.3, 1.0);
    CHECK(whole == doctest::Approx(split).epsilon(1e-10));
    CHECK(whole == doctest::Approx(singular_sin_mean(alpha)).epsilon(1e-10));
}

TEST_CASE("centered functionals have zero stationary mean") {
    const ChainSpec B = ChainSpec::bernoulli();
    for (const Functional& g : {linear_centered(), cos2pi(), singular_sin(0.3)}) {
        RngStream rng(77, 0);
        const int n = 1000000;
        double mean = 0.0, m2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double v = g.eval(sample_stationary(B, rng));
            const double d = v - mean;
            mean += d / (i + 1);
            m2 += d * (v - mean);
        }
        CHECK(std::abs(mean) < 4.0 * std::sqrt(m2 / (n - 1) / n));
    }
}

TEST_CASE("lebesgue_linear coefficients and truncation tail") {
    const Functional g = lebesgue_linear(2.0, 2);
    const auto& c = std::get<LinearCoeffs>(g.tag()).coeffs;
    REQUIRE(c.size() == 3);
    CHECK(c[0] == 1.0);
    CHECK(c[1] == 0.25);
    CHECK(c[2] == doctest::Approx(1.0 / 9.0));
    // sum_{k>2} (k+1)^-2 / 2 is below the bound 3^-1 / 2.
    double tail = 0.0;
    for (int k = 3; k < 1000000; ++k) tail += 0.5 / ((k + 1.0) * (k + 1.0));
    CHECK(tail <= g.traits().truncation_tail);
    State x(3);
    x << 0.9, 0.2, 0.7;  // u_{-2}, u_{-1}, u_0
    CHECK(g.eval(x) == doctest::Approx(1.0 * 0.2 + 0.25 * -0.3 + (0.4) / 9.0));
}
