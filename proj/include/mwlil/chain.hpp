#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>

#include "mwlil/rng.hpp"

namespace mwlil {

enum class ChainKind { Bernoulli, Lebesgue };

std::string_view to_string(ChainKind kind);

/// Which example chain is simulated.
///
/// Bernoulli: X_{n+1} = (X_n + e_{n+1}) / 2 with fair bits e, stationary law
/// uniform on [0, 1].  Lebesgue: a window (u_{-K}, ..., u_0) of iid uniforms
/// shifted by one fresh uniform per step; `memory` is K.
struct ChainSpec {
    ChainKind kind = ChainKind::Bernoulli;
    int memory = 0;

    static ChainSpec bernoulli() { return {ChainKind::Bernoulli, 0}; }
    static ChainSpec lebesgue(int memory = 32);

    /// Number of coordinates in a state: 1 or K + 1.
    Eigen::Index state_size() const {
        return kind == ChainKind::Bernoulli ? 1 : static_cast<Eigen::Index>(memory) + 1;
    }

    std::string describe() const;

    bool operator==(const ChainSpec&) const = default;
};

/// Chain state. Lebesgue windows are stored oldest first: index 0 holds
/// u_{-K}, index K holds u_0.
using State = Eigen::VectorXd;

inline double bernoulli_step(double x, bool bit) { return bit ? 0.5 * (x + 1.0) : 0.5 * x; }

State sample_stationary(const ChainSpec& spec, RngStream& rng);

State step(const ChainSpec& spec, const State& x, RngStream& rng);

/// Shift a Lebesgue window in place, appending `fresh` as the new u_0.
void shift_window(Eigen::Ref<Eigen::VectorXd> window, double fresh);

bool is_valid_state(const ChainSpec& spec, const State& x);

}  // namespace mwlil
