#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mwlil/functional.hpp"

namespace mwlil {

/// A named, parameterised entry of the functional catalog.
///
///   zero                  g = 0 (either chain)
///   linear_centered       g(x) = x - 1/2 (Bernoulli; Qg = g/2)
///   cos2pi                g(x) = sqrt(2) cos(2 pi x) (Bernoulli; Qg = 0)
///   singular_sin(alpha)   g(x) = x^-alpha sin(1/x) - mean, 0 < alpha < 1/2 (Bernoulli)
///   lebesgue_linear(q,K)  g(x) = sum_{k<=K} (k+1)^-q (u_{-k} - 1/2) (Lebesgue)
struct FunctionalSpec {
    std::string name = "linear_centered";
    double alpha = 0.3;
    double q = 2.0;
    int terms_K = -1;  // -1: use the chain memory

    bool operator==(const FunctionalSpec&) const = default;
};

/// Parses "cos2pi", "singular_sin(0.45)", "lebesgue_linear(2,2)", ...
FunctionalSpec parse_functional_spec(std::string_view text);
std::string to_string(const FunctionalSpec& spec);

const std::vector<std::string>& catalog_names();

Functional linear_centered();
Functional cos2pi();
Functional singular_sin(double alpha);
Functional lebesgue_linear(double q, int terms_K);

/// Builds the catalog entry for a chain; throws std::invalid_argument when
/// the entry does not live on that chain.
Functional make_functional(const FunctionalSpec& spec, const ChainSpec& chain);

/// Integral of x^-alpha sin(1/x) over [0, 1], i.e. of t^(alpha-2) sin t over [1, inf).
double singular_sin_mean(double alpha);

/// Integral of x^-alpha sin(1/x) over [a, b] with 0 <= a < b <= 1.
double singular_sin_integral(double alpha, double a, double b);

}  // namespace mwlil
