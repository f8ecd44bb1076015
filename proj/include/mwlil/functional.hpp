#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <variant>

#include "mwlil/chain.hpp"

namespace mwlil {

/// Qg = eigenvalue * g.
struct QEigen {
    double eigenvalue = 0.0;
};

/// Qg = 0.
struct QAnnihilated {};

/// Lebesgue functional g(x) = sum_k coeffs[k] * (u_{-k} - 1/2).
struct LinearCoeffs {
    Eigen::VectorXd coeffs;
};

using AnalyticTag = std::variant<std::monostate, QEigen, QAnnihilated, LinearCoeffs>;

enum class Provenance { Exact, MonteCarlo };

using Evaluator = std::function<double(std::span<const double>)>;

class DyadicFunction;

/// Optional analytic side information carried with a functional.
struct FunctionalTraits {
    /// Integral of the raw (uncentered) evaluator over [a, b]; used to build
    /// cell averages when plain Gauss-Legendre is not accurate.
    std::function<double(double, double)> raw_cell_integral;
    /// Integral of the centered g squared, when known by a closed form or a
    /// substitution rule.
    std::optional<double> second_moment;
    /// Sup-norm bound on the part of g dropped by a finite memory window.
    double truncation_tail = 0.0;
    /// q when the coefficients follow c_k = (k + 1)^{-q}.
    std::optional<double> coefficient_decay;
    Provenance provenance = Provenance::Exact;
    std::int64_t mc_samples = 0;
    bool identically_zero = false;
    /// Set when the functional is exactly this step function on [0, 1].
    std::shared_ptr<const DyadicFunction> dyadic;
};

/// A real-valued function on chain states, g(x) = raw(x) - centering.
class Functional {
public:
    Functional(ChainKind kind, Evaluator raw, double centering = 0.0, AnalyticTag tag = {},
               std::string name = {});

    double operator()(std::span<const double> x) const { return raw_(x) - centering_; }
    double operator()(double x) const { return (*this)(std::span<const double>(&x, 1)); }
    double eval(const State& x) const {
        return (*this)(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
    }
    double raw(std::span<const double> x) const { return raw_(x); }

    ChainKind chain_kind() const { return kind_; }
    double centering() const { return centering_; }
    const AnalyticTag& tag() const { return tag_; }
    const std::string& name() const { return name_; }
    void set_name(std::string name) { name_ = std::move(name); }

    const FunctionalTraits& traits() const { return traits_; }
    FunctionalTraits& traits() { return traits_; }

    bool is_zero() const { return traits_.identically_zero; }

    /// Cache of dyadic projections, shared between copies of this functional.
    struct ProjectionCache {
        std::mutex mutex;
        std::map<int, std::shared_ptr<const DyadicFunction>> by_level;
    };
    ProjectionCache& projection_cache() const { return *cache_; }

private:
    ChainKind kind_;
    Evaluator raw_;
    double centering_;
    AnalyticTag tag_;
    std::string name_;
    FunctionalTraits traits_;
    std::shared_ptr<ProjectionCache> cache_;
};

Functional zero_functional(ChainKind kind);

Functional from_linear_coeffs(Eigen::VectorXd coeffs, std::string name = "linear");

Functional from_dyadic(std::shared_ptr<const DyadicFunction> f, std::string name = "dyadic");

/// c * g, with tags and traits carried along.
Functional scaled(const Functional& g, double c);

/// a * f + b * g on a common chain.
Functional combine(double a, const Functional& f, double b, const Functional& g);

}  // namespace mwlil
