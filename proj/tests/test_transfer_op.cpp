#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mwlil/catalog.hpp"
#include "mwlil/dyadic.hpp"
#include "mwlil/transfer_op.hpp"

using namespace mwlil;

namespace {

const ChainSpec B = ChainSpec::bernoulli();

// Max of |f - g| on a fine grid of [0, 1].
template <class F, class G>
double grid_gap(F f, G g, int points = 4097) {
    double gap = 0.0;
    for (int i = 0; i < points; ++i) {
        const double x = i / double(points - 1);
        gap = std::max(gap, std::abs(f(x) - g(x)));
    }
    return gap;
}

Functional untagged(const Functional& g) {
    return Functional(g.chain_kind(), [g](std::span<const double> x) { return g.raw(x); }, g.centering(), {},
                      g.name() + "_untagged");
}

}  // namespace

TEST_CASE("Q of the linear functional halves it") {
    const Functional g = linear_centered();
    const Functional Qg = apply_Q(B, untagged(g));
    CHECK(grid_gap([&](double x) { return Qg(x); }, [](double x) { return (x - 0.5) / 2.0; }) < 1e-12);
    const Functional Qt = apply_Q(B, g);
    CHECK(std::get<QEigen>(Qt.tag()).eigenvalue == 0.5);  // g/2 is still an eigenfunction
    CHECK(grid_gap([&](double x) { return Qt(x); }, [](double x) { return (x - 0.5) / 2.0; }) < 1e-15);
}

TEST_CASE("Q annihilates sqrt(2) cos(2 pi x)") {
    const Functional Qg = apply_Q(B, untagged(cos2pi()));
    CHECK(grid_gap([&](double x) { return Qg(x); }, [](double) { return 0.0; }) < 1e-12);
    CHECK(apply_Q(B, cos2pi()).is_zero());
}

TEST_CASE("tags agree with the two-point formula") {
    // QEigen(rho): ||Qg - rho g|| by quadrature.
    const Functional g = linear_centered();
    const Functional diff = combine(1.0, apply_Q(B, untagged(g)), -0.5, untagged(g));
    CHECK(l2_norm(B, diff).value < 1e-8);
}

TEST_CASE("Lebesgue linear coefficients shift under Q") {
    const ChainSpec L = ChainSpec::lebesgue(2);
    Eigen::VectorXd c(3);
    c << 1.0, 0.25, 1.0 / 9.0;
    const Functional g = from_linear_coeffs(c);
    const Functional Qg = apply_Q(L, g);
    const auto& d = std::get<LinearCoeffs>(Qg.tag()).coeffs;
    CHECK(d[0] == 0.25);
    CHECK(d[1] == 1.0 / 9.0);
    CHECK(d[2] == 0.0);

    // Monte Carlo conditional expectation of the untagged version.
    TransferOptions opts;
    opts.conditional_samples = 20000;
    const Functional mc = apply_Q(L, untagged(g), opts);
    CHECK(mc.traits().provenance == Provenance::MonteCarlo);
    RngStream rng(5, 0);
    for (int t = 0; t < 10; ++t) {
        const State x = sample_stationary(L, rng);
        // The fresh coordinate enters with coefficient 1 and variance 1/12.
        CHECK(std::abs(mc.eval(x) - Qg.eval(x)) < 4.0 * std::sqrt(1.0 / 12.0 / 20000));
    }
}

TEST_CASE("apply_Q rejects a functional from the other chain") {
    CHECK_THROWS_AS(apply_Q(ChainSpec::lebesgue(2), linear_centered()), std::invalid_argument);
    CHECK_THROWS_AS(apply_Q(B, lebesgue_linear(2.0, 2)), std::invalid_argument);
}

TEST_CASE("Q^k by preimage sums") {
    const Functional g = linear_centered();
    CHECK(apply_Qk_bernoulli(g, 2, 0.0) == doctest::Approx(-0.125).epsilon(1e-15));
    // hand sum: (1/4)[(-1/2) + (-1/4) + 0 + (1/4)]
    CHECK(apply_Qk_bernoulli(g, 2, 0.0) == 0.25 * (-0.5 - 0.25 + 0.0 + 0.25));
    for (double x : {0.0, 0.3, 0.77}) {
        CHECK(apply_Qk_bernoulli(g, 0, x) == g(x));
        CHECK(std::abs(apply_Qk_bernoulli(cos2pi(), 1, x)) < 1e-12);
        CHECK(apply_Qk_bernoulli(g, 10, x) == doctest::Approx(std::ldexp(x - 0.5, -10)).epsilon(1e-10));
    }
    CHECK_THROWS_AS(apply_Qk_bernoulli(g, 23, 0.5), BudgetExceeded);
    CHECK_THROWS_AS(apply_Qk_bernoulli(g, 5, 0.5, 4), BudgetExceeded);
    CHECK_THROWS_AS(apply_Qk_bernoulli(g, -1, 0.5), std::invalid_argument);
}

TEST_CASE("Monte Carlo preimages are unbiased") {
    RngStream rng(3, 0);
    const Estimate e = apply_Qk_bernoulli_mc(singular_sin(0.3), 30, 0.4, 200000, rng);
    // Q^30 g is within ~2^-15 ||g|| of zero; the estimate must cover it.
    CHECK(std::abs(e.value) < 4.0 * e.std_error + 1e-3);
}

TEST_CASE("V_n closed forms") {
    const Functional g = linear_centered();
    const Functional v3 = compute_Vn(B, g, 3);
    CHECK(grid_gap([&](double x) { return v3(x); }, [&](double x) { return 1.75 * g(x); }) < 1e-15);
    const Functional v3u = compute_Vn(B, untagged(g), 3);
    CHECK(grid_gap([&](double x) { return v3u(x); }, [&](double x) { return 1.75 * g(x); }) < 1e-12);
    for (int n : {1, 2, 7, 100}) {
        const Functional v = compute_Vn(B, cos2pi(), n);
        CHECK(grid_gap([&](double x) { return v(x); }, [](double x) {
                  return std::numbers::sqrt2 * std::cos(2 * std::numbers::pi * x);
              }) < 1e-15);
    }
    const Functional s = singular_sin(0.3);
    const Functional v1 = compute_Vn(B, s, 1);
    CHECK(v1(0.37) == s(0.37));
    CHECK_THROWS_AS(compute_Vn(B, g, 0), std::invalid_argument);
}

TEST_CASE("V_n of an untagged g beyond the cap falls back to Monte Carlo") {
    TransferOptions opts;
    opts.k_max = 6;
    opts.conditional_samples = 2000;
    const Functional v = compute_Vn(B, untagged(linear_centered()), 12, opts);
    CHECK(v.traits().provenance == Provenance::MonteCarlo);
    // True value (2 - 2^-11)(x - 1/2); the Monte Carlo part contributes
    // 5 terms each below 2^-7 / 4 in size.
    const double x = 0.9;
    CHECK(v(x) == doctest::Approx((2.0 - std::ldexp(1.0, -11)) * (x - 0.5)).epsilon(0.02));
}

TEST_CASE("L2 norms") {
    CHECK(l2_norm(B, linear_centered()).value == doctest::Approx(1.0 / std::sqrt(12.0)).epsilon(1e-9));
    CHECK(std::abs(l2_norm(B, untagged(linear_centered())).value - 1.0 / std::sqrt(12.0)) < 1e-9);
    CHECK(std::abs(l2_norm(B, untagged(cos2pi())).value - 1.0) < 1e-9);
    const NormEstimate z = l2_norm(B, zero_functional(ChainKind::Bernoulli));
    CHECK(z.value == 0.0);
    CHECK(z.std_error == 0.0);
    // Quadrature cannot resolve the oscillation at 0.
    CHECK_THROWS_AS(l2_norm(B, singular_sin(0.45)), ConvergenceError);
    const NormEstimate sub = l2_norm(B, singular_sin(0.45), NormMethod::Substitution);
    CHECK(sub.value * sub.value == doctest::Approx(4.8888942462804302866).epsilon(1e-9));
}

TEST_CASE("Monte Carlo norm agrees with the exact value") {
    RngStream rng(8, 0);
    const NormEstimate m = l2_norm_monte_carlo(B, cos2pi(), 400000, rng);
    CHECK(m.method == NormMethod::MonteCarlo);
    CHECK(m.std_error > 0.0);
    CHECK(std::abs(m.value - 1.0) < 4.0 * m.std_error);
}

TEST_CASE("Q is a contraction on every catalog functional") {
    for (const Functional& g : {linear_centered(), cos2pi(), singular_sin(0.3), singular_sin(0.45)}) {
        const std::vector<double> q = qk_norms(B, g, 30);
        for (std::size_t k = 0; k + 1 < q.size(); ++k) CHECK(q[k + 1] <= q[k] * (1 + 1e-12));
    }
    const std::vector<double> q = qk_norms(ChainSpec::lebesgue(2), lebesgue_linear(2.0, 2), 5);
    for (std::size_t k = 0; k + 1 < q.size(); ++k) CHECK(q[k + 1] <= q[k]);
    CHECK(q[3] == 0.0);
}

TEST_CASE("dyadic projection error is reported for singular g") {
    CHECK(projection_error(B, linear_centered()) == 0.0);
    const double e = projection_error(B, singular_sin(0.3));
    CHECK(e > 0.0);
    CHECK(e < l2_norm(B, singular_sin(0.3), NormMethod::Substitution).value);
    // Finer grids lose less.
    TransferOptions fine;
    fine.dyadic_level = 22;
    CHECK(projection_error(B, singular_sin(0.3), fine) < e);
}

TEST_CASE("V_n norms") {
    const std::vector<double> v = vn_norms(B, linear_centered(), 40);
    for (int n = 1; n <= 40; ++n)
        CHECK(v[n - 1] == doctest::Approx((2.0 - std::ldexp(2.0, -n)) / std::sqrt(12.0)).epsilon(1e-12));
    const std::vector<double> c = vn_norms(B, cos2pi(), 40);
    for (double x : c) CHECK(x == doctest::Approx(1.0).epsilon(1e-15));
    // Dyadic route for an untagged copy matches the closed form.
    const std::vector<double> u = vn_norms(B, untagged(linear_centered()), 64);
    for (int n = 1; n <= 64; ++n) CHECK(u[n - 1] == doctest::Approx(v[std::min(n, 40) - 1]).epsilon(1e-6));
}
