#include "mwlil/chain.hpp"

#include <algorithm>
#include <stdexcept>

namespace mwlil {

std::string_view to_string(ChainKind kind) {
    return kind == ChainKind::Bernoulli ? "bernoulli" : "lebesgue";
}

ChainSpec ChainSpec::lebesgue(int memory) {
    if (memory < 0) throw std::invalid_argument("lebesgue memory K must be nonnegative");
    return {ChainKind::Lebesgue, memory};
}

std::string ChainSpec::describe() const {
    if (kind == ChainKind::Bernoulli) return "bernoulli";
    return "lebesgue(K=" + std::to_string(memory) + ")";
}

State sample_stationary(const ChainSpec& spec, RngStream& rng) {
    State x(spec.state_size());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.uniform();
    return x;
}

void shift_window(Eigen::Ref<Eigen::VectorXd> window, double fresh) {
    const Eigen::Index n = window.size();
    std::copy(window.data() + 1, window.data() + n, window.data());
    window[n - 1] = fresh;
}

State step(const ChainSpec& spec, const State& x, RngStream& rng) {
    if (x.size() != spec.state_size()) throw std::invalid_argument("state does not match chain");
    State next = x;
    if (spec.kind == ChainKind::Bernoulli) {
        next[0] = bernoulli_step(x[0], rng.bit());
    } else {
        shift_window(next, rng.uniform());
    }
    return next;
}

bool is_valid_state(const ChainSpec& spec, const State& x) {
    if (x.size() != spec.state_size()) return false;
    return (x.array() >= 0.0).all() && (x.array() <= 1.0).all();
}

}  // namespace mwlil
