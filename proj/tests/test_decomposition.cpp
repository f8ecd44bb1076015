#include <cmath>
#include <vector>

#include "doctest.h"
#include "mwlil/catalog.hpp"
#include "mwlil/decomposition.hpp"

using namespace mwlil;

namespace {

const ChainSpec B = ChainSpec::bernoulli();

Path make_path(const ChainSpec& spec, const Functional& g, Eigen::Index n, std::uint64_t stream) {
    RngStream rng(77, stream);
    return simulate_path(spec, g, n, rng, true);
}

}  // namespace

TEST_CASE("eps schedule") {
    CHECK(eps_schedule(1).k == 1);
    CHECK(eps_schedule(1).eps == 0.5);
    CHECK(eps_schedule(8).k == 4);
    CHECK(eps_schedule(8).eps == 1.0 / 16);
    CHECK(eps_schedule(1000).k == 10);
    CHECK(eps_schedule(1023).k == 10);
    CHECK(eps_schedule(1024).k == 11);
    for (std::int64_t n : {1, 2, 3, 17, 4096, 123457}) {
        const EpsSchedule s = eps_schedule(n);
        CHECK(std::ldexp(1.0, s.k - 1) <= n);
        CHECK(n < std::ldexp(1.0, s.k));
    }
    CHECK_THROWS_AS(eps_schedule(0), std::invalid_argument);
}

TEST_CASE("decomposition of a hand path for the linear functional") {
    // X = 0.5, 0.25, 0.625 ; g = x - 1/2 ; eps = 1/2 gives h = g and Qh = g / 2.
    Path p;
    p.spec = B;
    p.n = 2;
    p.states.resize(1, 3);
    p.states << 0.5, 0.25, 0.625;
    p.observables.resize(2);
    p.observables << -0.25, 0.125;
    p.partial_sums.resize(2);
    p.partial_sums << -0.25, -0.125;
    const Resolvent r = resolvent(B, linear_centered(), 0.5, 1e-12);
    const DecompositionTrace t = decompose_at_eps(p, r);
    // M_1 = h(X_1) - Qh(X_0) = -0.25 - 0 ; M_2 = M_1 + 0.125 - (-0.125)
    CHECK(t.M_eps[0] == doctest::Approx(-0.25));
    CHECK(t.M_eps[1] == doctest::Approx(0.0));
    // eps * S(h) = 0.5 * (-0.25), 0.5 * (-0.125)
    CHECK(t.drift[0] == doctest::Approx(-0.125));
    CHECK(t.drift[1] == doctest::Approx(-0.0625));
    // R_i = Qh(X_0) - Qh(X_i)
    CHECK(t.R_eps[0] == doctest::Approx(0.125));
    CHECK(t.R_eps[1] == doctest::Approx(-0.0625));
    CHECK(t.identity_holds());
    CHECK(t.source_discrepancy == 0.0);
}

TEST_CASE("identity holds for every catalog functional") {
    const std::vector<Functional> gs{linear_centered(), cos2pi(), singular_sin(0.3), singular_sin(0.45)};
    for (std::size_t i = 0; i < gs.size(); ++i) {
        const Path p = make_path(B, gs[i], 5000, i);
        for (double eps : {0.5, 1.0 / 256, 1.0 / 4096}) {
            const DecompositionTrace t = decompose_at_eps(p, resolvent(B, gs[i], eps, 1e-10));
            CHECK(t.identity_holds());
            CHECK(t.identity_tolerance >= 1e-9);
        }
    }
    const ChainSpec L = ChainSpec::lebesgue(6);
    const Functional g = lebesgue_linear(2.0, 6);
    const Path p = make_path(L, g, 5000, 9);
    const DecompositionTrace t = decompose_at_eps(p, resolvent(L, g, 1.0 / 64, 1e-12));
    CHECK(t.identity_holds());
    CHECK(t.source_discrepancy < 1e-10);
}

TEST_CASE("projected source is reported separately") {
    const Functional g = singular_sin(0.3);
    const Path p = make_path(B, g, 4000, 3);
    const Resolvent r = resolvent(B, g, 1.0 / 32, 1e-10);
    REQUIRE(r.method == ResolventMethod::DyadicSeries);
    const DecompositionTrace t = decompose_at_eps(p, r);
    CHECK(t.identity_holds());
    CHECK(t.source_discrepancy > 0.0);
    CHECK((t.S - t.S_source).cwiseAbs().maxCoeff() == t.source_discrepancy);
}

TEST_CASE("decomposition needs retained states and matching chains") {
    RngStream rng(1, 0);
    const Path bare = simulate_path(B, cos2pi(), 100, rng, false);
    CHECK_THROWS_AS(decompose_at_eps(bare, resolvent(B, cos2pi(), 0.5, 1e-10)), std::invalid_argument);
    const Path p = make_path(B, cos2pi(), 100, 0);
    const ChainSpec L = ChainSpec::lebesgue(2);
    CHECK_THROWS_AS(decompose_at_eps(p, resolvent(L, lebesgue_linear(2, 2), 0.5, 1e-10)),
                    std::invalid_argument);
}

TEST_CASE("martingale check on synthetic data") {
    RngStream rng(5, 0);
    const std::size_t n = 1 << 16;
    std::vector<double> cond(n), centred(n), biased(n), growing(n);
    for (std::size_t i = 0; i < n; ++i) {
        cond[i] = rng.uniform();
        const double e = rng.uniform() - 0.5;
        centred[i] = e;
        biased[i] = e + 0.2 * (cond[i] - 0.5);
        growing[i] = e * (i < n / 2 ? 1.0 : 1.5);
    }
    const MartingaleDiagnostic ok = martingale_check(centred, cond);
    CHECK(ok.verdict == CheckVerdict::Pass);
    CHECK(ok.bins.size() == 20);
    CHECK(ok.stationarity_checked);
    CHECK(martingale_check(biased, cond).verdict == CheckVerdict::Fail);
    const MartingaleDiagnostic g = martingale_check(growing, cond);
    CHECK(g.verdict == CheckVerdict::Fail);
    CHECK(g.variance_ratio < 0.9);

    const std::vector<double> few(500, 0.0);
    CHECK(martingale_check(few, few).verdict == CheckVerdict::Inconclusive);
    CHECK_THROWS_AS(martingale_check(few, std::vector<double>(3, 0.0)), std::invalid_argument);
}

TEST_CASE("M_eps increments pass the martingale check") {
    for (const Functional& g : {linear_centered(), cos2pi(), singular_sin(0.45)}) {
        const Path p = make_path(B, g, 1 << 16, 4);
        const DecompositionTrace t = decompose_at_eps(p, resolvent(B, g, 1.0 / 1024, 1e-10));
        CHECK(martingale_check(t, p).verdict == CheckVerdict::Pass);
    }
    const ChainSpec L = ChainSpec::lebesgue(4);
    const Path p = make_path(L, lebesgue_linear(2.0, 4), 1 << 16, 4);
    const DecompositionTrace t = decompose_at_eps(p, resolvent(L, lebesgue_linear(2.0, 4), 1.0 / 1024, 1e-12));
    CHECK(martingale_check(t, p).verdict == CheckVerdict::Pass);
}

TEST_CASE("S itself fails the martingale check") {
    // g(X_i) increments are predictable from X_{i-1} for the linear functional.
    const Path p = make_path(B, linear_centered(), 1 << 16, 6);
    std::vector<double> inc(p.n), cond(p.n);
    for (Eigen::Index i = 0; i < p.n; ++i) {
        inc[i] = p.observables[i];
        cond[i] = p.states(0, i);
    }
    CHECK(martingale_check(inc, cond).verdict == CheckVerdict::Fail);
}

TEST_CASE("limit decomposition") {
    const Functional g = linear_centered();
    const Path p = make_path(B, g, 10000, 8);
    const DecompositionTrace t = limit_decompose(p, B, g, 1.0 / 4096);
    REQUIRE(t.limit_M.has_value());
    REQUIRE(t.limit_R.has_value());
    CHECK(t.epsilon == 1.0 / 4096);
    CHECK(((*t.limit_M + *t.limit_R) - t.S).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(t.limit_budget > 0.0);
    CHECK(t.limit_budget < 1e-3);
    // R_n = eps S_n(h) + Qh(X_0) - Qh(X_n) with |h| <= 1 and |Qh| <= 1/2.
    CHECK(t.limit_R->cwiseAbs().maxCoeff() <= 1.0 + 10000.0 / 4096.0);
    CHECK_THROWS_AS(limit_decompose(p, B, g, 0.75), std::invalid_argument);
}
