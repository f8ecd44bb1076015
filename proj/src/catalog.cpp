#include "mwlil/catalog.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "mwlil/oscillatory.hpp"

namespace mwlil {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    return s;
}

double parse_number(std::string_view s) {
    const std::string str(trim(s));
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(str, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("bad numeric parameter '" + str + "'");
    }
    if (used != str.size()) throw std::invalid_argument("bad numeric parameter '" + str + "'");
    return v;
}

}  // namespace

const std::vector<std::string>& catalog_names() {
    static const std::vector<std::string> names{"zero", "linear_centered", "cos2pi",
                                                "singular_sin", "lebesgue_linear"};
    return names;
}

FunctionalSpec parse_functional_spec(std::string_view text) {
    text = trim(text);
    FunctionalSpec spec;
    std::vector<double> params;
    const auto open = text.find('(');
    if (open == std::string_view::npos) {
        spec.name = std::string(text);
    } else {
        if (text.back() != ')') throw std::invalid_argument("unbalanced parentheses in functional");
        spec.name = std::string(trim(text.substr(0, open)));
        std::string_view inner = text.substr(open + 1, text.size() - open - 2);
        while (!trim(inner).empty()) {
            const auto comma = inner.find(',');
            params.push_back(parse_number(inner.substr(0, comma)));
            if (comma == std::string_view::npos) break;
            inner.remove_prefix(comma + 1);
        }
    }
    bool known = false;
    for (const auto& n : catalog_names()) known = known || n == spec.name;
    if (!known) throw std::invalid_argument("unknown functional '" + spec.name + "'");

    if (spec.name == "singular_sin") {
        if (params.size() > 1) throw std::invalid_argument("singular_sin takes (alpha)");
        if (!params.empty()) spec.alpha = params[0];
    } else if (spec.name == "lebesgue_linear") {
        if (params.size() > 2) throw std::invalid_argument("lebesgue_linear takes (q[,K])");
        if (!params.empty()) spec.q = params[0];
        if (params.size() == 2) {
            if (params[1] < 0 || params[1] != std::floor(params[1]))
                throw std::invalid_argument("lebesgue_linear K must be a nonnegative integer");
            spec.terms_K = static_cast<int>(params[1]);
        }
    } else if (!params.empty()) {
        throw std::invalid_argument(spec.name + " takes no parameters");
    }
    return spec;
}

std::string to_string(const FunctionalSpec& spec) {
    auto num = [](double v) {
        char buf[64];
        const auto res = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, res.ptr);
    };
    if (spec.name == "singular_sin") return "singular_sin(" + num(spec.alpha) + ")";
    if (spec.name == "lebesgue_linear") {
        std::string s = "lebesgue_linear(" + num(spec.q);
        if (spec.terms_K >= 0) s += "," + std::to_string(spec.terms_K);
        return s + ")";
    }
    return spec.name;
}

Functional linear_centered() {
    Functional g(ChainKind::Bernoulli, [](std::span<const double> x) { return x[0]; }, 0.5,
                 QEigen{0.5}, "linear_centered");
    g.traits().second_moment = 1.0 / 12.0;
    g.traits().raw_cell_integral = [](double a, double b) { return 0.5 * (b * b - a * a); };
    return g;
}

Functional cos2pi() {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    Functional g(
        ChainKind::Bernoulli,
        [](std::span<const double> x) { return std::numbers::sqrt2 * std::cos(two_pi * x[0]); },
        0.0, QAnnihilated{}, "cos2pi");
    g.traits().second_moment = 1.0;
    g.traits().raw_cell_integral = [](double a, double b) {
        return std::numbers::sqrt2 * (std::sin(two_pi * b) - std::sin(two_pi * a)) / two_pi;
    };
    return g;
}

double singular_sin_mean(double alpha) {
    return power_trig_integral(alpha - 2.0, 1.0, std::numeric_limits<double>::infinity(),
                               Trig::Sin);
}

double singular_sin_integral(double alpha, double a, double b) {
    // x = 1/t maps x^-alpha sin(1/x) dx to t^(alpha-2) sin t dt on [1/b, 1/a].
    const double t_lo = 1.0 / b;
    const double t_hi = a > 0.0 ? 1.0 / a : std::numeric_limits<double>::infinity();
    return power_trig_integral(alpha - 2.0, t_lo, t_hi, Trig::Sin);
}

Functional singular_sin(double alpha) {
    if (!(alpha > 0.0 && alpha < 0.5))
        throw std::invalid_argument("singular_sin needs 0 < alpha < 1/2");
    const double mean = singular_sin_mean(alpha);
    auto eval = [alpha](std::span<const double> x) {
        const double v = x[0];
        return v > 0.0 ? std::pow(v, -alpha) * std::sin(1.0 / v) : 0.0;
    };
    Functional g(ChainKind::Bernoulli, eval, mean, {},
                 to_string(FunctionalSpec{"singular_sin", alpha}));
    g.traits().raw_cell_integral = [alpha](double a, double b) {
        return singular_sin_integral(alpha, a, b);
    };
    // int_1^inf t^(2a-2) sin^2 t dt = 1/(2(1-2a)) - (1/2) int_1^inf t^(2a-2) cos 2t dt,
    // and int_1^inf t^b cos 2t dt = 2^(-b-1) int_2^inf s^b cos s ds.
    const double beta = 2.0 * alpha - 2.0;
    const double cos_part = std::pow(2.0, -beta - 1.0) *
                            power_trig_integral(beta, 2.0, std::numeric_limits<double>::infinity(),
                                                Trig::Cos);
    const double raw_second = 0.5 / (1.0 - 2.0 * alpha) - 0.5 * cos_part;
    g.traits().second_moment = raw_second - mean * mean;
    return g;
}

Functional lebesgue_linear(double q, int terms_K) {
    if (terms_K < 0) throw std::invalid_argument("lebesgue_linear needs K >= 0");
    if (!(q > 0.5)) throw std::invalid_argument("lebesgue_linear needs q > 1/2 for square summability");
    Eigen::VectorXd c(terms_K + 1);
    for (int k = 0; k <= terms_K; ++k) c[k] = std::pow(static_cast<double>(k + 1), -q);
    Functional g = from_linear_coeffs(std::move(c),
                                      to_string(FunctionalSpec{"lebesgue_linear", 0.3, q, terms_K}));
    // sup-norm of the dropped terms: sum_{k>K} (k+1)^-q / 2 <= (K+1)^(1-q) / (2(q-1)).
    g.traits().truncation_tail =
        q > 1.0 ? std::pow(terms_K + 1.0, 1.0 - q) / (2.0 * (q - 1.0))
                : std::numeric_limits<double>::infinity();
    g.traits().coefficient_decay = q;
    return g;
}

Functional make_functional(const FunctionalSpec& spec, const ChainSpec& chain) {
    const bool bern = chain.kind == ChainKind::Bernoulli;
    if (spec.name == "zero") return zero_functional(chain.kind);
    if (spec.name == "lebesgue_linear") {
        if (bern) throw std::invalid_argument("lebesgue_linear lives on the lebesgue chain");
        const int K = spec.terms_K < 0 ? chain.memory : spec.terms_K;
        if (K > chain.memory)
            throw std::invalid_argument("lebesgue_linear K exceeds the chain memory");
        return lebesgue_linear(spec.q, K);
    }
    if (!bern) throw std::invalid_argument(spec.name + " lives on the bernoulli chain");
    if (spec.name == "linear_centered") return linear_centered();
    if (spec.name == "cos2pi") return cos2pi();
    if (spec.name == "singular_sin") return singular_sin(spec.alpha);
    throw std::invalid_argument("unknown functional '" + spec.name + "'");
}

}  // namespace mwlil
