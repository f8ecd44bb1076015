#include <cmath>
#include <cstdlib>
#include <vector>

#include "doctest.h"
#include "mwlil/catalog.hpp"
#include "mwlil/ensemble.hpp"
#include "mwlil/parallel.hpp"

using namespace mwlil;

namespace {

EnsembleConfig small_config(const Functional& g, std::int64_t paths, std::int64_t n) {
    EnsembleConfig c;
    c.spec = ChainSpec::bernoulli();
    c.g = g;
    c.n = n;
    c.paths = paths;
    c.seed = 99;
    c.n0 = 256;
    c.checkpoints = {256, 1024, 4096};
    return c;
}

}  // namespace

TEST_CASE("parallel_for visits every index once") {
    std::vector<int> hits(1000, 0);
    parallel_for(1000, 4, [&](std::int64_t i) { hits[static_cast<std::size_t>(i)] += 1; });
    for (int h : hits) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(10, 3,
                                 [](std::int64_t i) {
                                     if (i == 7) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
}

TEST_CASE("MWLIL_THREADS overrides the requested count") {
    ::unsetenv("MWLIL_THREADS");
    CHECK(resolve_threads(3) == 3);
    CHECK(resolve_threads(0) >= 1);
    ::setenv("MWLIL_THREADS", "2", 1);
    CHECK(resolve_threads(5) == 2);
    ::unsetenv("MWLIL_THREADS");
}

TEST_CASE("ensemble results do not depend on the thread count") {
    EnsembleConfig c = small_config(singular_sin(0.3), 24, 4096);
    c.threads = 1;
    const EnsembleReport a = run_ensemble(c);
    c.threads = 4;
    const EnsembleReport b = run_ensemble(c);
    CHECK(a.S_samples.values == b.S_samples.values);
    CHECK(a.R_samples.values == b.R_samples.values);
    CHECK(a.scheduled_R_samples.values == b.scheduled_R_samples.values);
    CHECK(a.lil_quantiles == b.lil_quantiles);
    for (std::size_t p = 0; p < a.per_path.size(); ++p) {
        CHECK(a.per_path[p].stream_id == p);
        CHECK(a.per_path[p].running_sup_abs == b.per_path[p].running_sup_abs);
        CHECK(a.per_path[p].ergodic_H2 == b.per_path[p].ergodic_H2);
    }
}

TEST_CASE("ensemble paths are the simulated paths") {
    const EnsembleConfig c = small_config(cos2pi(), 3, 4096);
    const EnsembleReport r = run_ensemble(c);
    for (std::int64_t p = 0; p < 3; ++p) {
        RngStream rng(c.seed, static_cast<std::uint64_t>(p));
        const Path path = simulate_path(c.spec, c.g, c.n, rng, false);
        CHECK(r.per_path[p].S_n == doctest::Approx(path.S(c.n)).epsilon(1e-12));
        CHECK(r.S_samples.values(p, 1) == doctest::Approx(path.S(1024)).epsilon(1e-12));
        const LilStatistic st = lil_statistic(path, c.n0);
        CHECK(r.per_path[p].running_sup_abs == doctest::Approx(st.running_sup_abs).epsilon(1e-12));
    }
}

TEST_CASE("ensemble verdicts for the linear functional") {
    const EnsembleReport r = run_ensemble(small_config(linear_centered(), 2000, 4096));
    CHECK(std::abs(r.H_norm_ref - 0.5) < 1e-3);
    CHECK(r.variance_curve.verdict == CheckVerdict::Pass);
    CHECK(r.remainder_curve.verdict == CheckVerdict::Pass);
    // H_eps^2 is constant along paths for this functional.
    const double c = 1.0 / (0.5 + std::ldexp(1.0, -12));
    CHECK(r.ergodic_H2.value == doctest::Approx(c * c / 16.0).epsilon(1e-12));
    CHECK(r.lil_quantiles.size() == r.quantile_levels.size());
    for (std::size_t q = 1; q < r.lil_quantiles.size(); ++q) CHECK(r.lil_quantiles[q] >= r.lil_quantiles[q - 1]);
    // Scheduled remainders are bounded by 2 max|Qh_eps| = 2 / (1 + 2 eps).
    for (double v : r.scheduled_R2) CHECK(v <= 4.0);
}

TEST_CASE("ensemble without decomposition") {
    EnsembleConfig c = small_config(cos2pi(), 10, 4096);
    c.decompose = false;
    const EnsembleReport r = run_ensemble(c);
    CHECK_FALSE(r.H_limit.has_value());
    CHECK(r.variance_curve.verdict == CheckVerdict::Inconclusive);
    CHECK(r.scheduled_R2.empty());
}

TEST_CASE("ensemble rejects bad configurations") {
    EnsembleConfig c = small_config(cos2pi(), 10, 4096);
    c.n0 = 8192;
    CHECK_THROWS_AS(run_ensemble(c), std::invalid_argument);
    c = small_config(cos2pi(), 0, 4096);
    CHECK_THROWS_AS(run_ensemble(c), std::invalid_argument);
    c = small_config(cos2pi(), 2, 4096);
    c.checkpoints = {1024, 512};
    CHECK_THROWS_AS(run_ensemble(c), std::invalid_argument);
    c = small_config(lebesgue_linear(2, 2), 2, 4096);
    CHECK_THROWS_AS(run_ensemble(c), std::invalid_argument);
}

TEST_CASE("Lebesgue ensemble") {
    EnsembleConfig c;
    c.spec = ChainSpec::lebesgue(2);
    c.g = lebesgue_linear(2.0, 2);
    c.n = 4096;
    c.paths = 1000;
    c.seed = 5;
    c.n0 = 256;
    const EnsembleReport r = run_ensemble(c);
    // ||H||_1 = (c_0 + c_1 + c_2) / sqrt(12) = (1 + 1/4 + 1/9) / sqrt(12).
    CHECK(r.H_norm_ref == doctest::Approx((1.0 + 0.25 + 1.0 / 9.0) / std::sqrt(12.0)).epsilon(1e-3));
    CHECK(r.variance_curve.verdict == CheckVerdict::Pass);
}

TEST_CASE("remainders are small against sqrt(n)") {
    for (const Functional& g : {linear_centered(), singular_sin(0.45)}) {
        EnsembleConfig c = small_config(g, 200, 1 << 16);
        c.lil = false;
        c.checkpoints = {1 << 6, 1 << 8, 1 << 10, 1 << 12, 1 << 14, 1 << 16};
        const EnsembleReport r = run_ensemble(c);
        const std::vector<double> ns(c.checkpoints.begin(), c.checkpoints.end());
        // E[R_n(eps_n)^2] grows no faster than n^(2 alpha + 0.1) with alpha from the V_n fit.
        const double alpha = fit_growth(c.spec, g, default_growth_grid()).alpha_hat;
        CHECK(fit_log_log(ns, r.scheduled_R2).alpha_hat <= 2.0 * alpha + 0.1);
        // For singular g the limit remainder also carries the sums of g - Pg,
        // which grow like sqrt(n); the median check needs an exact source.
        if (r.H_limit->projection_error > 0.0) continue;
        // median |limit R_n| / sqrt(n) decreases over 2^8 .. 2^16
        std::vector<double> med;
        for (std::size_t j = 1; j < c.checkpoints.size(); ++j) {
            std::vector<double> v;
            for (Eigen::Index p = 0; p < r.R_samples.values.rows(); ++p)
                v.push_back(std::abs(r.R_samples.values(p, j)) / std::sqrt(double(c.checkpoints[j])));
            med.push_back(median(v));
        }
        for (std::size_t j = 1; j < med.size(); ++j) CHECK(med[j] < med[j - 1]);
    }
}
