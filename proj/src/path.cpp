#include "mwlil/path.hpp"

#include <stdexcept>
#include <variant>

namespace mwlil {

void check_compatible(const ChainSpec& spec, const Functional& g) {
    if (spec.kind != g.chain_kind())
        throw std::invalid_argument("functional '" + g.name() + "' does not live on " +
                                    spec.describe());
    if (const auto* lin = std::get_if<LinearCoeffs>(&g.tag())) {
        if (lin->coeffs.size() > spec.state_size() &&
            (lin->coeffs.tail(lin->coeffs.size() - spec.state_size()).array() != 0.0).any())
            throw std::invalid_argument("functional needs a longer memory window than " +
                                        spec.describe());
    }
}

Path simulate_path(const ChainSpec& spec, const Functional& g, Eigen::Index n, RngStream& rng,
                   bool retain_states) {
    if (n < 1) throw std::invalid_argument("simulate_path needs n >= 1");
    check_compatible(spec, g);

    Path path;
    path.spec = spec;
    path.master_seed = rng.master_seed();
    path.stream_id = rng.stream_id();
    path.n = n;
    path.observables.resize(n);
    path.partial_sums.resize(n);
    if (retain_states) path.states.resize(spec.state_size(), n + 1);

    State x = sample_stationary(spec, rng);
    if (retain_states) path.states.col(0) = x;
    const std::span<const double> view(x.data(), static_cast<std::size_t>(x.size()));
    double s = 0.0;
    if (spec.kind == ChainKind::Bernoulli) {
        double v = x[0];
        for (Eigen::Index i = 0; i < n; ++i) {
            v = bernoulli_step(v, rng.bit());
            const double gi = g(v);
            s += gi;
            path.observables[i] = gi;
            path.partial_sums[i] = s;
            if (retain_states) path.states(0, i + 1) = v;
        }
    } else {
        for (Eigen::Index i = 0; i < n; ++i) {
            shift_window(x, rng.uniform());
            const double gi = g(view);
            s += gi;
            path.observables[i] = gi;
            path.partial_sums[i] = s;
            if (retain_states) path.states.col(i + 1) = x;
        }
    }
    return path;
}

}  // namespace mwlil
