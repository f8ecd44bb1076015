#pragma once

#include <array>

namespace mwlil::detail {

// Nodes on [-1, 1] and weights, symmetric halves listed from the centre out.
struct GaussLegendre5 {
    static constexpr std::array<double, 3> nodes{0.0, 0.5384693101056831, 0.9061798459386640};
    static constexpr std::array<double, 3> weights{0.5688888888888889, 0.4786286704993665,
                                                   0.2369268850561891};
};

struct GaussLegendre10 {
    static constexpr std::array<double, 5> nodes{0.1488743389816312, 0.4333953941292472,
                                                 0.6794095682990244, 0.8650633666889845,
                                                 0.9739065285171717};
    static constexpr std::array<double, 5> weights{0.2955242247147529, 0.2692667193099963,
                                                   0.2190863625159820, 0.1494513491505806,
                                                   0.0666713443086881};
};

template <typename F>
double gauss_legendre5(F&& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double s = GaussLegendre5::weights[0] * f(mid);
    for (int i = 1; i < 3; ++i) {
        const double d = half * GaussLegendre5::nodes[i];
        s += GaussLegendre5::weights[i] * (f(mid - d) + f(mid + d));
    }
    return half * s;
}

template <typename F>
double gauss_legendre10(F&& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 5; ++i) {
        const double d = half * GaussLegendre10::nodes[i];
        s += GaussLegendre10::weights[i] * (f(mid - d) + f(mid + d));
    }
    return half * s;
}

}  // namespace mwlil::detail
