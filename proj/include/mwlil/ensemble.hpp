#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mwlil/chain.hpp"
#include "mwlil/functional.hpp"
#include "mwlil/lil.hpp"
#include "mwlil/transfer_op.hpp"

namespace mwlil {

struct EnsembleConfig {
    ChainSpec spec;
    Functional g = zero_functional(ChainKind::Bernoulli);
    std::int64_t n = 1 << 16;
    std::int64_t paths = 100;
    std::uint64_t seed = 0;
    std::vector<std::int64_t> checkpoints;  // empty: default_checkpoints(n)
    std::int64_t n0 = 1000;                 // start of the LIL suprema
    std::vector<double> eps_grid;           // decreasing; empty: 2^-1 .. 2^-12
    bool lil = true;
    bool decompose = true;      // M, limit R, ergodic H^2 and scheduled remainders
    int threads = 1;
    TransferOptions opts;
};

struct PathSummary {
    std::uint64_t stream_id = 0;
    double S_n = 0.0;
    double running_sup = 0.0;
    double running_sup_abs = 0.0;
    double ergodic_H2 = 0.0;  // (1/n) sum H_{eps_min}(X_{i-1}, X_i)^2
    double limit_R_n = 0.0;
};

/// Statistics across independent paths; path p uses RngStream(seed, p).
struct EnsembleReport {
    std::int64_t seeds = 0;
    std::int64_t n = 0;
    std::vector<double> quantile_levels{0.1, 0.25, 0.5, 0.75, 0.9};
    std::vector<double> lil_quantiles;      // running_sup
    std::vector<double> lil_abs_quantiles;  // running_sup_abs
    CheckpointSamples S_samples;
    CheckpointSamples R_samples;            // limit remainder S_n - M_n
    CheckpointSamples scheduled_R_samples;  // R_n(eps_n) with eps_n from the schedule
    Curve variance_curve;
    Curve remainder_curve;
    std::vector<double> scheduled_R2;       // E[R_n(eps_n)^2] per checkpoint
    std::optional<HLimitEstimate> H_limit;
    double H_norm_ref = 0.0;
    Estimate ergodic_H2;                    // mean and std error across paths
    std::vector<PathSummary> per_path;
};

EnsembleReport run_ensemble(const EnsembleConfig& config);

}  // namespace mwlil
