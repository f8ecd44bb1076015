#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "mwlil/chain.hpp"
#include "mwlil/functional.hpp"
#include "mwlil/rng.hpp"

namespace mwlil {

/// A simulated trajectory X_0..X_n with S_i = g(X_1) + ... + g(X_i).
struct Path {
    ChainSpec spec;
    std::uint64_t master_seed = 0;
    std::uint64_t stream_id = 0;
    Eigen::Index n = 0;
    /// state_size x (n + 1), column i is X_i; empty unless states were retained.
    Eigen::MatrixXd states;
    Eigen::VectorXd observables;   // g(X_1) .. g(X_n)
    Eigen::VectorXd partial_sums;  // S_1 .. S_n

    bool has_states() const { return states.cols() == n + 1; }
    /// S_i for 1 <= i <= n.
    double S(Eigen::Index i) const { return partial_sums[i - 1]; }
};

/// X_0 from the stationary law, then n transitions. Deterministic in `rng`.
Path simulate_path(const ChainSpec& spec, const Functional& g, Eigen::Index n, RngStream& rng,
                   bool retain_states);

/// Throws std::invalid_argument unless g can be evaluated on the chain's states.
void check_compatible(const ChainSpec& spec, const Functional& g);

}  // namespace mwlil
