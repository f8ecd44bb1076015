#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "mwlil/chain.hpp"
#include "mwlil/functional.hpp"
#include "mwlil/rng.hpp"

namespace mwlil {

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BudgetExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConsistencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class NormMethod { DyadicQuadrature, MonteCarlo, Exact, Substitution };
std::string_view to_string(NormMethod m);

/// An L2 norm with its uncertainty.  `std_error` is a Monte Carlo standard
/// error, or a deterministic error estimate for quadrature.
struct NormEstimate {
    double value = 0.0;
    double std_error = 0.0;
    NormMethod method = NormMethod::Exact;
    std::int64_t samples_or_level = 0;
};

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

struct TransferOptions {
    int k_max = 22;                           // cap on exact 2^k preimage sums
    int dyadic_level = 20;                    // step-function grid for untagged Bernoulli g
    int quadrature_level = 16;                // composite Simpson on 2^16 + 1 nodes
    double quadrature_rtol = 1e-9;
    std::int64_t conditional_samples = 4096;  // Monte Carlo conditional expectations
    std::int64_t norm_samples = 1 << 20;      // Monte Carlo norms
    std::uint64_t mc_seed = 0x6d776c696cULL;
    double resolvent_tol = 1e-10;
};

// ---------------------------------------------------------------------------
// Transition operator

/// Qg(x) = E[g(X_1) | X_0 = x].
///
/// Bernoulli: the exact two-point average (g(x/2) + g((1+x)/2)) / 2, or the
/// tag / step-function shortcut.  Lebesgue: coefficient shift for
/// LinearCoeffs, otherwise a Monte Carlo conditional expectation over a
/// fixed stream of fresh uniforms.
Functional apply_Q(const ChainSpec& spec, const Functional& g, const TransferOptions& opts = {});

/// 2^-k sum_{j < 2^k} g((x + j) / 2^k); throws BudgetExceeded when k > k_max.
double apply_Qk_bernoulli(const Functional& g, int k, double x, int k_max = 22);

/// Unbiased estimate of Q^k g(x) from `samples` uniformly drawn preimages.
Estimate apply_Qk_bernoulli_mc(const Functional& g, int k, double x, std::int64_t samples,
                               RngStream& rng);

/// V_n g = sum_{k < n} Q^k g.
Functional compute_Vn(const ChainSpec& spec, const Functional& g, std::int64_t n,
                      const TransferOptions& opts = {});

// ---------------------------------------------------------------------------
// Norms

NormEstimate l2_norm(const ChainSpec& spec, const Functional& f,
                     NormMethod method = NormMethod::DyadicQuadrature,
                     const TransferOptions& opts = {});

NormEstimate l2_norm_monte_carlo(const ChainSpec& spec, const Functional& f,
                                 std::int64_t samples, RngStream& rng);

/// The most accurate norm route available for f: exact representations,
/// then quadrature (Bernoulli) or Monte Carlo (Lebesgue).
NormEstimate norm(const ChainSpec& spec, const Functional& f, const TransferOptions& opts = {});

/// ||Q^k g|| for k = 0..k_last.
std::vector<double> qk_norms(const ChainSpec& spec, const Functional& g, std::int64_t k_last,
                             const TransferOptions& opts = {});

/// ||V_n g|| for n = 1..n_last.
std::vector<double> vn_norms(const ChainSpec& spec, const Functional& g, std::int64_t n_last,
                             const TransferOptions& opts = {});

/// ||g - P g|| for the dyadic projection P used by the operator routines,
/// or 0 when g is handled exactly.  NaN when ||g|| is unavailable.
double projection_error(const ChainSpec& spec, const Functional& g,
                        const TransferOptions& opts = {});

// ---------------------------------------------------------------------------
// Resolvent

enum class ResolventMethod { ClosedForm, DyadicSeries, PointwiseSeries, MonteCarloSeries };
std::string_view to_string(ResolventMethod m);

enum class ResolventRoute { Auto, PointwiseSeries };

/// h_eps solving (1 + eps) h = Qh + source, with diagnostics.
///
/// `source` is the functional the equation is solved for: g itself, or its
/// dyadic projection for untagged Bernoulli g (then `projection_error`
/// holds ||g - source||).
struct Resolvent {
    double epsilon = 0.0;
    Functional h;
    Functional Qh;
    Functional source;
    int truncation_N = 0;
    double tail_bound = 0.0;
    double projection_error = 0.0;
    ResolventMethod method = ResolventMethod::ClosedForm;
};

Resolvent resolvent(const ChainSpec& spec, const Functional& g, double epsilon, double tol,
                    const TransferOptions& opts = {},
                    ResolventRoute route = ResolventRoute::Auto);

/// H(x_0, x_1) on pairs of states.
struct BivariateFunctional {
    std::function<double(std::span<const double>, std::span<const double>)> eval;
    std::optional<double> norm1;

    double operator()(std::span<const double> x0, std::span<const double> x1) const {
        return eval(x0, x1);
    }
    double operator()(double x0, double x1) const {
        return eval(std::span<const double>(&x0, 1), std::span<const double>(&x1, 1));
    }
};

/// H_eps(x_0, x_1) = h_eps(x_1) - Qh_eps(x_0).
BivariateFunctional make_H_eps(const ChainSpec& spec, const Resolvent& r,
                               const TransferOptions& opts = {});

/// ||H||_1 for H(x_0, x_1) = h(x_1) - Qh(x_0), via ||h||^2 - ||Qh||^2.
NormEstimate increment_norm1(const ChainSpec& spec, const Functional& h,
                             const TransferOptions& opts = {});

/// ||H_eps||_1 = sqrt(||h_eps||^2 - ||Qh_eps||^2).
NormEstimate norm1_H(const ChainSpec& spec, const Resolvent& r, const TransferOptions& opts = {});

/// Direct Monte Carlo of E[H(X_0, X_1)^2] under the stationary pair law.
Estimate norm1_squared_monte_carlo(const ChainSpec& spec, const BivariateFunctional& H,
                                   std::int64_t samples, RngStream& rng);

/// eps_j = 2^-j for j = first..last.
std::vector<double> dyadic_eps_grid(int first = 1, int last = 12);

struct HLimitEstimate {
    NormEstimate H_norm;                 // ||H_{eps_min}||_1, std_error = tail budget
    std::vector<double> eps;
    std::vector<double> H_norms;         // ||H_eps||_1 per grid point
    std::vector<double> h_norms;         // ||h_eps|| per grid point
    std::vector<double> cauchy_diffs;    // ||H_{eps_j} - H_{eps_{j-1}}||_1, j >= 1
    std::vector<double> r2_lhs;          // cauchy_diffs^2
    std::vector<double> r2_rhs;          // (eps_j + eps_{j-1}) (||h_j||^2 + ||h_{j-1}||^2)
    bool r2_holds = true;
    bool diffs_monotone = true;
    double tail_budget = 0.0;            // extrapolated ||H_{eps_min} - H||_1
    double projection_error = 0.0;
};

/// ||H||_1 from a decreasing eps grid plus Cauchy and (R2) diagnostics.
HLimitEstimate estimate_H_limit(const ChainSpec& spec, const Functional& g,
                                std::span<const double> eps_grid,
                                const TransferOptions& opts = {});

// ---------------------------------------------------------------------------
// Growth exponents

struct GrowthFit {
    double alpha_hat = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    bool r_squared_applicable = true;
    double x_min = 0.0;
    double x_max = 0.0;
};

/// Least squares of log y on log x.
GrowthFit fit_log_log(std::span<const double> x, std::span<const double> y);

/// Slope of log ||V_n g|| against log n over n_grid.
GrowthFit fit_growth(const ChainSpec& spec, const Functional& g,
                     std::span<const std::int64_t> n_grid, const TransferOptions& opts = {});

/// Slope of log ||h_eps|| against log(1/eps).
GrowthFit fit_resolvent_growth(const ChainSpec& spec, const Functional& g,
                               std::span<const double> eps_grid, const TransferOptions& opts = {});

/// Growth of V_n and of h_eps side by side; consistent when
/// alpha_h <= alpha_V + tolerance.
struct GrowthCheck {
    GrowthFit vn;
    GrowthFit resolvent;
    bool consistent = true;
};

GrowthCheck check_growth(const ChainSpec& spec, const Functional& g,
                         std::span<const std::int64_t> n_grid, std::span<const double> eps_grid,
                         double tolerance = 0.05, const TransferOptions& opts = {});

std::vector<std::int64_t> default_growth_grid();

}  // namespace mwlil
