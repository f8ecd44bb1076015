#include "mwlil/functional.hpp"

#include <cmath>
#include <stdexcept>

#include "mwlil/dyadic.hpp"

namespace mwlil {

Functional::Functional(ChainKind kind, Evaluator raw, double centering, AnalyticTag tag,
                       std::string name)
    : kind_(kind),
      raw_(std::move(raw)),
      centering_(centering),
      tag_(std::move(tag)),
      name_(std::move(name)),
      cache_(std::make_shared<ProjectionCache>()) {
    if (!raw_) throw std::invalid_argument("functional needs an evaluator");
}

Functional zero_functional(ChainKind kind) {
    AnalyticTag tag = QAnnihilated{};
    if (kind == ChainKind::Lebesgue) tag = LinearCoeffs{Eigen::VectorXd::Zero(1)};
    Functional g(kind, [](std::span<const double>) { return 0.0; }, 0.0, tag, "zero");
    g.traits().identically_zero = true;
    g.traits().second_moment = 0.0;
    return g;
}

Functional from_linear_coeffs(Eigen::VectorXd coeffs, std::string name) {
    if (coeffs.size() == 0) coeffs = Eigen::VectorXd::Zero(1);
    auto eval = [c = coeffs](std::span<const double> x) {
        const auto newest = static_cast<Eigen::Index>(x.size()) - 1;
        const Eigen::Index terms = std::min<Eigen::Index>(c.size(), newest + 1);
        double s = 0.0;
        for (Eigen::Index k = 0; k < terms; ++k) s += c[k] * (x[newest - k] - 0.5);
        return s;
    };
    const double second_moment = coeffs.squaredNorm() / 12.0;
    const bool zero = (coeffs.array() == 0.0).all();
    Functional g(ChainKind::Lebesgue, eval, 0.0, LinearCoeffs{std::move(coeffs)}, std::move(name));
    g.traits().second_moment = second_moment;
    g.traits().identically_zero = zero;
    return g;
}

Functional from_dyadic(std::shared_ptr<const DyadicFunction> f, std::string name) {
    if (!f) throw std::invalid_argument("null dyadic function");
    auto eval = [f](std::span<const double> x) { return (*f)(x[0]); };
    Functional g(ChainKind::Bernoulli, eval, 0.0, {}, std::move(name));
    g.traits().second_moment = f->squared_norm();
    g.traits().identically_zero = (f->values() == 0.0).all();
    g.traits().dyadic = std::move(f);
    return g;
}

namespace {

AnalyticTag scale_tag(const AnalyticTag& tag, double c) {
    if (const auto* lin = std::get_if<LinearCoeffs>(&tag)) return LinearCoeffs{c * lin->coeffs};
    return tag;
}

// Tag of a * f + b * g when it is determined by the operands' tags.
AnalyticTag combine_tags(double a, const Functional& f, double b, const Functional& g) {
    const auto& tf = f.tag();
    const auto& tg = g.tag();
    if (const auto* lf = std::get_if<LinearCoeffs>(&tf)) {
        if (const auto* lg = std::get_if<LinearCoeffs>(&tg)) {
            const Eigen::Index n = std::max(lf->coeffs.size(), lg->coeffs.size());
            Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
            c.head(lf->coeffs.size()) += a * lf->coeffs;
            c.head(lg->coeffs.size()) += b * lg->coeffs;
            return LinearCoeffs{std::move(c)};
        }
        return std::monostate{};
    }
    if (std::holds_alternative<QAnnihilated>(tf) && std::holds_alternative<QAnnihilated>(tg))
        return QAnnihilated{};
    const auto* ef = std::get_if<QEigen>(&tf);
    const auto* eg = std::get_if<QEigen>(&tg);
    if (ef && eg && ef->eigenvalue == eg->eigenvalue) return *ef;
    return std::monostate{};
}

}  // namespace

Functional scaled(const Functional& g, double c) {
    if (c == 0.0) return zero_functional(g.chain_kind());
    if (g.traits().dyadic) {
        auto f = std::make_shared<const DyadicFunction>(
            g.traits().dyadic->level(), c * g.traits().dyadic->values());
        Functional out = from_dyadic(std::move(f), g.name());
        out.traits().truncation_tail = std::abs(c) * g.traits().truncation_tail;
        return out;
    }
    auto eval = [g, c](std::span<const double> x) { return c * g.raw(x); };
    Functional out(g.chain_kind(), eval, c * g.centering(), scale_tag(g.tag(), c), g.name());
    const auto& t = g.traits();
    auto& o = out.traits();
    if (t.raw_cell_integral)
        o.raw_cell_integral = [ci = t.raw_cell_integral, c](double a, double b) {
            return c * ci(a, b);
        };
    if (t.second_moment) o.second_moment = c * c * *t.second_moment;
    o.truncation_tail = std::abs(c) * t.truncation_tail;
    o.coefficient_decay = t.coefficient_decay;
    o.provenance = t.provenance;
    o.mc_samples = t.mc_samples;
    o.identically_zero = t.identically_zero;
    return out;
}

Functional combine(double a, const Functional& f, double b, const Functional& g) {
    if (f.chain_kind() != g.chain_kind())
        throw std::invalid_argument("cannot combine functionals on different chains");
    if (f.is_zero() || a == 0.0) return scaled(g, b);
    if (g.is_zero() || b == 0.0) return scaled(f, a);
    if (f.traits().dyadic && g.traits().dyadic) {
        auto d = std::make_shared<const DyadicFunction>(
            axpby(a, *f.traits().dyadic, b, *g.traits().dyadic));
        Functional out = from_dyadic(std::move(d), "combination");
        out.traits().truncation_tail =
            std::abs(a) * f.traits().truncation_tail + std::abs(b) * g.traits().truncation_tail;
        return out;
    }
    AnalyticTag tag = combine_tags(a, f, b, g);
    if (const auto* lin = std::get_if<LinearCoeffs>(&tag)) {
        Functional out = from_linear_coeffs(lin->coeffs, "combination");
        out.traits().truncation_tail =
            std::abs(a) * f.traits().truncation_tail + std::abs(b) * g.traits().truncation_tail;
        return out;
    }
    auto eval = [f, g, a, b](std::span<const double> x) { return a * f.raw(x) + b * g.raw(x); };
    Functional out(f.chain_kind(), eval, a * f.centering() + b * g.centering(), tag, "combination");
    auto& o = out.traits();
    if (f.traits().raw_cell_integral && g.traits().raw_cell_integral)
        o.raw_cell_integral = [fi = f.traits().raw_cell_integral, gi = g.traits().raw_cell_integral,
                               a, b](double lo, double hi) {
            return a * fi(lo, hi) + b * gi(lo, hi);
        };
    o.truncation_tail =
        std::abs(a) * f.traits().truncation_tail + std::abs(b) * g.traits().truncation_tail;
    if (f.traits().provenance == Provenance::MonteCarlo ||
        g.traits().provenance == Provenance::MonteCarlo) {
        o.provenance = Provenance::MonteCarlo;
        o.mc_samples = std::max(f.traits().mc_samples, g.traits().mc_samples);
    }
    return out;
}

}  // namespace mwlil
