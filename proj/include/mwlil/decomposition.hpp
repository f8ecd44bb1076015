#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mwlil/path.hpp"
#include "mwlil/transfer_op.hpp"
#include "mwlil/verdict.hpp"

namespace mwlil {

/// The unique k with 2^(k-1) <= n < 2^k, and eps = 2^-k.
struct EpsSchedule {
    std::int64_t n = 1;
    int k = 1;
    double eps = 0.5;
};

EpsSchedule eps_schedule(std::int64_t n);

/// S_i = M_i(eps) + eps S_i(h_eps) + R_i(eps) along one path, i = 1..n.
///
/// The identity holds for the resolvent's source functional; S_source holds
/// its partial sums and source_discrepancy = max_i |S_i - S_source_i|
/// (zero unless g was replaced by its dyadic projection).
struct DecompositionTrace {
    Eigen::Index n = 0;
    double epsilon = 0.0;
    Eigen::VectorXd S;
    Eigen::VectorXd S_source;
    Eigen::VectorXd M_eps;
    Eigen::VectorXd R_eps;
    Eigen::VectorXd drift;
    double identity_residual = 0.0;
    double identity_tolerance = 0.0;  // 1e-9 max(1, max |S_source_i|)
    double source_discrepancy = 0.0;

    // Limit decomposition S = M + R with M built from H_{eps_min}.
    std::optional<Eigen::VectorXd> limit_M;
    std::optional<Eigen::VectorXd> limit_R;
    double limit_budget = 0.0;  // estimate of ||H_{eps_min} - H||_1

    bool identity_holds() const { return identity_residual <= identity_tolerance; }
};

DecompositionTrace decompose_at_eps(const Path& path, const Resolvent& r);

/// Limit decomposition from a precomputed H_{eps_min} resolvent and budget.
DecompositionTrace limit_decompose(const Path& path, const Resolvent& r_min, double budget);

/// Computes the resolvent at eps_min and the Cauchy budget over the grid
/// 2^-1 .. eps_min.
DecompositionTrace limit_decompose(const Path& path, const ChainSpec& spec, const Functional& g,
                                   double eps_min, const TransferOptions& opts = {});

struct BinStat {
    double lo = 0.0;
    double hi = 0.0;
    std::int64_t count = 0;
    double mean = 0.0;
    double std_error = 0.0;
};

struct MartingaleDiagnostic {
    CheckVerdict verdict = CheckVerdict::Inconclusive;
    std::vector<BinStat> bins;
    double max_abs_z = 0.0;
    bool stationarity_checked = false;
    double variance_ratio = 1.0;  // first half over second half
};

/// Bins increments by the conditioning value into 20 quantile bins; every bin
/// mean must be 0 within 4 standard errors.  For n >= 2^16 the first-half to
/// second-half variance ratio must also lie in [0.9, 1.1].
MartingaleDiagnostic martingale_check(std::span<const double> increments,
                                      std::span<const double> conditioning);

/// Uses the M_eps increments of the trace and X_{j-1} (the newest
/// coordinate for Lebesgue windows) as the conditioning value.
MartingaleDiagnostic martingale_check(const DecompositionTrace& trace, const Path& path);

}  // namespace mwlil
