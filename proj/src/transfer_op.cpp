#include "mwlil/transfer_op.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "mwlil/dyadic.hpp"

namespace mwlil {

std::string_view to_string(NormMethod m) {
    switch (m) {
        case NormMethod::DyadicQuadrature: return "dyadic_quadrature";
        case NormMethod::MonteCarlo: return "monte_carlo";
        case NormMethod::Exact: return "exact";
        case NormMethod::Substitution: return "substitution";
    }
    return "?";
}

std::string_view to_string(ResolventMethod m) {
    switch (m) {
        case ResolventMethod::ClosedForm: return "closed_form";
        case ResolventMethod::DyadicSeries: return "dyadic_series";
        case ResolventMethod::PointwiseSeries: return "pointwise_series";
        case ResolventMethod::MonteCarloSeries: return "monte_carlo_series";
    }
    return "?";
}

namespace {

void require_kind(const ChainSpec& spec, const Functional& g) {
    if (spec.kind != g.chain_kind())
        throw std::invalid_argument("functional '" + g.name() + "' does not live on " +
                                    spec.describe());
}

bool is_tagged_closed_form(const AnalyticTag& tag) {
    return std::holds_alternative<QEigen>(tag) || std::holds_alternative<QAnnihilated>(tag);
}

// Bernoulli functionals that go through the dyadic step-function route.
bool uses_dyadic(const ChainSpec& spec, const Functional& g) {
    return spec.kind == ChainKind::Bernoulli && !g.is_zero() && !is_tagged_closed_form(g.tag());
}

std::shared_ptr<const DyadicFunction> working_projection(const Functional& g,
                                                         const TransferOptions& opts) {
    if (g.traits().dyadic) return g.traits().dyadic;
    return dyadic_projection(g, opts.dyadic_level);
}

Eigen::VectorXd shifted_coeffs(const Eigen::VectorXd& c, Eigen::Index by) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(c.size());
    if (by < c.size()) out.head(c.size() - by) = c.tail(c.size() - by);
    return out;
}

// Fresh uniforms shared by all Monte Carlo conditional expectations built
// from the same options: row i holds the i-th sample's fresh coordinates.
std::shared_ptr<const Eigen::MatrixXd> fresh_uniforms(const TransferOptions& opts, Eigen::Index depth) {
    RngStream rng(opts.mc_seed, 0);
    auto m = std::make_shared<Eigen::MatrixXd>(opts.conditional_samples, std::max<Eigen::Index>(depth, 1));
    for (Eigen::Index i = 0; i < m->rows(); ++i)
        for (Eigen::Index j = 0; j < m->cols(); ++j) (*m)(i, j) = rng.uniform();
    return m;
}

// E[g(X_k) | X_0 = x] on the Lebesgue chain with common random numbers.
double lebesgue_conditional(const Functional& g, const Eigen::MatrixXd& fresh, int k,
                            std::span<const double> x) {
    if (k == 0) return g(x);
    const auto size = static_cast<Eigen::Index>(x.size());
    if (k > size) k = static_cast<int>(size);  // fully refreshed window
    Eigen::VectorXd w(size);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < fresh.rows(); ++i) {
        const Eigen::Index keep = size - k;
        for (Eigen::Index j = 0; j < keep; ++j) w[j] = x[static_cast<std::size_t>(j + k)];
        for (Eigen::Index j = 0; j < k; ++j) w[keep + j] = fresh(i, j);
        sum += g(std::span<const double>(w.data(), static_cast<std::size_t>(size)));
    }
    return sum / static_cast<double>(fresh.rows());
}

double pairwise_preimage_sum(const Functional& g, double x, double scale, std::uint64_t lo,
                             std::uint64_t hi) {
    if (hi - lo <= 64) {
        double s = 0.0;
        for (std::uint64_t j = lo; j < hi; ++j) s += g((x + static_cast<double>(j)) * scale);
        return s;
    }
    const std::uint64_t mid = lo + (hi - lo) / 2;
    return pairwise_preimage_sum(g, x, scale, lo, mid) + pairwise_preimage_sum(g, x, scale, mid, hi);
}

double simpson_unit(const std::function<double(double)>& f, int level) {
    const std::int64_t n = std::int64_t{1} << level;
    const double h = 1.0 / static_cast<double>(n);
    double odd = 0.0, even = 0.0;
    for (std::int64_t i = 1; i < n; ++i) {
        const double v = f(static_cast<double>(i) * h);
        (i % 2 ? odd : even) += v;
    }
    return h / 3.0 * (f(0.0) + 4.0 * odd + 2.0 * even + f(1.0));
}

NormEstimate squared_to_norm(double sq, double sq_err, NormMethod m, std::int64_t level) {
    NormEstimate e;
    e.value = std::sqrt(std::max(sq, 0.0));
    e.std_error = e.value > 0 ? sq_err / (2.0 * e.value) : std::sqrt(std::abs(sq_err));
    e.method = m;
    e.samples_or_level = level;
    return e;
}

}  // namespace

// ---------------------------------------------------------------------------

Functional apply_Q(const ChainSpec& spec, const Functional& g, const TransferOptions& opts) {
    require_kind(spec, g);
    if (g.is_zero()) return zero_functional(spec.kind);

    if (const auto* lin = std::get_if<LinearCoeffs>(&g.tag())) {
        Functional out = from_linear_coeffs(shifted_coeffs(lin->coeffs, 1), "Q(" + g.name() + ")");
        out.traits().truncation_tail = g.traits().truncation_tail;
        out.traits().coefficient_decay = g.traits().coefficient_decay;
        return out;
    }
    if (const auto* eig = std::get_if<QEigen>(&g.tag())) return scaled(g, eig->eigenvalue);
    if (std::holds_alternative<QAnnihilated>(g.tag())) return zero_functional(spec.kind);

    if (spec.kind == ChainKind::Bernoulli) {
        if (const auto& d = g.traits().dyadic)
            return from_dyadic(std::make_shared<const DyadicFunction>(d->apply_Q()),
                               "Q(" + g.name() + ")");
        auto eval = [g](std::span<const double> x) {
            const double a = 0.5 * x[0];
            const double b = 0.5 * (1.0 + x[0]);
            return 0.5 * (g.raw(std::span<const double>(&a, 1)) + g.raw(std::span<const double>(&b, 1)));
        };
        Functional out(ChainKind::Bernoulli, eval, g.centering(), {}, "Q(" + g.name() + ")");
        if (const auto& ci = g.traits().raw_cell_integral)
            out.traits().raw_cell_integral = [ci](double a, double b) {
                return ci(0.5 * a, 0.5 * b) + ci(0.5 * (1.0 + a), 0.5 * (1.0 + b));
            };
        out.traits().provenance = g.traits().provenance;
        out.traits().mc_samples = g.traits().mc_samples;
        return out;
    }

    auto fresh = fresh_uniforms(opts, 1);
    auto eval = [g, fresh](std::span<const double> x) { return lebesgue_conditional(g, *fresh, 1, x); };
    Functional out(ChainKind::Lebesgue, eval, 0.0, {}, "Q(" + g.name() + ")");
    out.traits().provenance = Provenance::MonteCarlo;
    out.traits().mc_samples = opts.conditional_samples;
    return out;
}

double apply_Qk_bernoulli(const Functional& g, int k, double x, int k_max) {
    if (g.chain_kind() != ChainKind::Bernoulli)
        throw std::invalid_argument("apply_Qk_bernoulli needs a Bernoulli functional");
    if (k < 0) throw std::invalid_argument("apply_Qk_bernoulli needs k >= 0");
    if (k > k_max)
        throw BudgetExceeded("Q^" + std::to_string(k) + " costs 2^" + std::to_string(k) +
                             " evaluations per point, above the cap k_max = " +
                             std::to_string(k_max));
    if (k == 0) return g(x);
    const std::uint64_t count = std::uint64_t{1} << k;
    const double scale = std::ldexp(1.0, -k);
    return pairwise_preimage_sum(g, x, scale, 0, count) * scale;
}

Estimate apply_Qk_bernoulli_mc(const Functional& g, int k, double x, std::int64_t samples,
                               RngStream& rng) {
    if (k < 0 || k > 62) throw std::invalid_argument("apply_Qk_bernoulli_mc needs 0 <= k <= 62");
    if (samples < 2) throw std::invalid_argument("apply_Qk_bernoulli_mc needs >= 2 samples");
    const std::uint64_t count = std::uint64_t{1} << k;
    const double scale = std::ldexp(1.0, -k);
    double mean = 0.0, m2 = 0.0;
    for (std::int64_t i = 0; i < samples; ++i) {
        const double v = g((x + static_cast<double>(rng.below(count))) * scale);
        const double d = v - mean;
        mean += d / static_cast<double>(i + 1);
        m2 += d * (v - mean);
    }
    const double var = m2 / static_cast<double>(samples - 1);
    return {mean, std::sqrt(var / static_cast<double>(samples))};
}

Functional compute_Vn(const ChainSpec& spec, const Functional& g, std::int64_t n,
                      const TransferOptions& opts) {
    require_kind(spec, g);
    if (n < 1) throw std::invalid_argument("compute_Vn needs n >= 1");
    if (g.is_zero() || n == 1) return g;

    if (const auto* eig = std::get_if<QEigen>(&g.tag())) {
        const double rho = eig->eigenvalue;
        const double factor = rho == 1.0 ? static_cast<double>(n)
                                         : (1.0 - std::pow(rho, static_cast<double>(n))) / (1.0 - rho);
        return scaled(g, factor);
    }
    if (std::holds_alternative<QAnnihilated>(g.tag())) return g;
    if (const auto* lin = std::get_if<LinearCoeffs>(&g.tag())) {
        const Eigen::VectorXd& c = lin->coeffs;
        Eigen::VectorXd v = Eigen::VectorXd::Zero(c.size());
        for (Eigen::Index k = 0; k < std::min<std::int64_t>(n, c.size()); ++k) v += shifted_coeffs(c, k);
        return from_linear_coeffs(std::move(v), "V" + std::to_string(n) + "(" + g.name() + ")");
    }

    if (spec.kind == ChainKind::Bernoulli) {
        if (const auto& d = g.traits().dyadic) {
            const int L = d->level();
            DyadicFunction cur = *d;
            Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(d->cells());
            const std::int64_t exact_terms = std::min<std::int64_t>(n, L + 1);
            for (std::int64_t k = 0; k < exact_terms; ++k) {
                acc += cur.refined(L).values();
                cur = cur.apply_Q();
            }
            if (n > L + 1) acc += static_cast<double>(n - L - 1) * cur.values()[0];
            return from_dyadic(std::make_shared<const DyadicFunction>(L, std::move(acc)),
                               "V" + std::to_string(n) + "(" + g.name() + ")");
        }
        const int k_max = opts.k_max;
        if (n - 1 <= k_max) {
            auto eval = [g, n, k_max](std::span<const double> x) {
                double s = 0.0;
                for (int k = 0; k < n; ++k) s += apply_Qk_bernoulli(g, k, x[0], k_max);
                return s;
            };
            return Functional(ChainKind::Bernoulli, eval, 0.0, {},
                              "V" + std::to_string(n) + "(" + g.name() + ")");
        }
        // Exact preimage sums up to k_max, Monte Carlo preimages beyond.
        const std::int64_t samples = opts.conditional_samples;
        const std::uint64_t seed = opts.mc_seed;
        auto eval = [g, n, k_max, samples, seed](std::span<const double> x) {
            double s = 0.0;
            for (int k = 0; k <= k_max; ++k) s += apply_Qk_bernoulli(g, k, x[0], k_max);
            RngStream rng(seed, 1);
            for (std::int64_t k = k_max + 1; k < n; ++k)
                s += apply_Qk_bernoulli_mc(g, static_cast<int>(std::min<std::int64_t>(k, 62)), x[0],
                                           samples, rng).value;
            return s;
        };
        Functional out(ChainKind::Bernoulli, eval, 0.0, {},
                       "V" + std::to_string(n) + "(" + g.name() + ")");
        out.traits().provenance = Provenance::MonteCarlo;
        out.traits().mc_samples = samples;
        return out;
    }

    // Lebesgue, untagged: Q^k g vanishes once the window is refreshed (k > K).
    const int terms = static_cast<int>(std::min<std::int64_t>(n, spec.memory + 1));
    auto fresh = fresh_uniforms(opts, spec.state_size());
    auto eval = [g, fresh, terms](std::span<const double> x) {
        double s = 0.0;
        for (int k = 0; k < terms; ++k) s += lebesgue_conditional(g, *fresh, k, x);
        return s;
    };
    Functional out(ChainKind::Lebesgue, eval, 0.0, {}, "V" + std::to_string(n) + "(" + g.name() + ")");
    out.traits().provenance = Provenance::MonteCarlo;
    out.traits().mc_samples = opts.conditional_samples;
    return out;
}

// ---------------------------------------------------------------------------

NormEstimate l2_norm(const ChainSpec& spec, const Functional& f, NormMethod method,
                     const TransferOptions& opts) {
    require_kind(spec, f);
    if (f.is_zero()) return {0.0, 0.0, NormMethod::Exact, 0};

    switch (method) {
        case NormMethod::Exact: {
            if (const auto& d = f.traits().dyadic)
                return {std::sqrt(d->squared_norm()), 0.0, NormMethod::Exact, d->level()};
            if (const auto* lin = std::get_if<LinearCoeffs>(&f.tag()))
                return {lin->coeffs.norm() / std::sqrt(12.0), 0.0, NormMethod::Exact, 0};
            if (f.traits().second_moment)
                return {std::sqrt(std::max(0.0, *f.traits().second_moment)), 0.0, NormMethod::Exact, 0};
            throw std::invalid_argument("no exact norm available for '" + f.name() + "'");
        }
        case NormMethod::Substitution: {
            if (!f.traits().second_moment)
                throw std::invalid_argument("no substitution rule for '" + f.name() + "'");
            return {std::sqrt(std::max(0.0, *f.traits().second_moment)), 1e-12,
                    NormMethod::Substitution, 0};
        }
        case NormMethod::MonteCarlo: {
            RngStream rng(opts.mc_seed, 2);
            return l2_norm_monte_carlo(spec, f, opts.norm_samples, rng);
        }
        case NormMethod::DyadicQuadrature: break;
    }

    if (const auto* lin = std::get_if<LinearCoeffs>(&f.tag()))
        return {lin->coeffs.norm() / std::sqrt(12.0), 0.0, NormMethod::Exact, 0};
    if (spec.kind != ChainKind::Bernoulli)
        throw std::invalid_argument("dyadic quadrature needs a Bernoulli functional");
    if (const auto& d = f.traits().dyadic)
        return {std::sqrt(d->squared_norm()), 0.0, NormMethod::DyadicQuadrature, d->level()};

    const std::function<double(double)> sq = [&f](double x) {
        const double v = f(x);
        return v * v;
    };
    const int level = opts.quadrature_level;
    const double fine = simpson_unit(sq, level);
    const double coarse = simpson_unit(sq, level - 1);
    const double richardson = fine + (fine - coarse) / 15.0;
    const double err = std::abs(fine - coarse);
    if (!std::isfinite(richardson) || err > opts.quadrature_rtol * std::abs(richardson) + 1e-28)
        throw ConvergenceError("quadrature of ||" + f.name() +
                               "||^2 did not converge; use Monte Carlo or a substitution rule");
    return squared_to_norm(richardson, err, NormMethod::DyadicQuadrature, level);
}

NormEstimate l2_norm_monte_carlo(const ChainSpec& spec, const Functional& f, std::int64_t samples,
                                 RngStream& rng) {
    require_kind(spec, f);
    if (samples < 2) throw std::invalid_argument("Monte Carlo norm needs >= 2 samples");
    double mean = 0.0, m2 = 0.0;
    for (std::int64_t i = 0; i < samples; ++i) {
        const State x = sample_stationary(spec, rng);
        const double v = f.eval(x);
        const double sq = v * v;
        const double d = sq - mean;
        mean += d / static_cast<double>(i + 1);
        m2 += d * (sq - mean);
    }
    const double se = std::sqrt(m2 / static_cast<double>(samples - 1) / static_cast<double>(samples));
    return squared_to_norm(mean, se, NormMethod::MonteCarlo, samples);
}

NormEstimate norm(const ChainSpec& spec, const Functional& f, const TransferOptions& opts) {
    require_kind(spec, f);
    if (f.is_zero()) return {0.0, 0.0, NormMethod::Exact, 0};
    if (const auto& d = f.traits().dyadic)
        return {std::sqrt(d->squared_norm()), 0.0, NormMethod::DyadicQuadrature, d->level()};
    if (const auto* lin = std::get_if<LinearCoeffs>(&f.tag()))
        return {lin->coeffs.norm() / std::sqrt(12.0), 0.0, NormMethod::Exact, 0};
    if (f.traits().second_moment) {
        const NormMethod m =
            is_tagged_closed_form(f.tag()) ? NormMethod::Exact : NormMethod::Substitution;
        return {std::sqrt(std::max(0.0, *f.traits().second_moment)),
                m == NormMethod::Exact ? 0.0 : 1e-12, m, 0};
    }
    if (spec.kind == ChainKind::Bernoulli) {
        try {
            return l2_norm(spec, f, NormMethod::DyadicQuadrature, opts);
        } catch (const ConvergenceError&) {
        }
    }
    return l2_norm(spec, f, NormMethod::MonteCarlo, opts);
}

double projection_error(const ChainSpec& spec, const Functional& g, const TransferOptions& opts) {
    if (!uses_dyadic(spec, g) || g.traits().dyadic) return 0.0;
    double full = std::numeric_limits<double>::quiet_NaN();
    if (g.traits().second_moment) {
        full = *g.traits().second_moment;
    } else {
        try {
            const double n = l2_norm(spec, g, NormMethod::DyadicQuadrature, opts).value;
            full = n * n;
        } catch (const ConvergenceError&) {
            return full;
        }
    }
    const double proj = working_projection(g, opts)->squared_norm();
    return std::sqrt(std::max(0.0, full - proj));
}

std::vector<double> qk_norms(const ChainSpec& spec, const Functional& g, std::int64_t k_last,
                             const TransferOptions& opts) {
    require_kind(spec, g);
    if (k_last < 0) throw std::invalid_argument("qk_norms needs k_last >= 0");
    std::vector<double> out(static_cast<std::size_t>(k_last + 1), 0.0);
    if (g.is_zero()) return out;

    if (const auto* eig = std::get_if<QEigen>(&g.tag())) {
        const double g0 = norm(spec, g, opts).value;
        for (std::int64_t k = 0; k <= k_last; ++k)
            out[k] = g0 * std::pow(std::abs(eig->eigenvalue), static_cast<double>(k));
        return out;
    }
    if (std::holds_alternative<QAnnihilated>(g.tag())) {
        out[0] = norm(spec, g, opts).value;
        return out;
    }
    if (const auto* lin = std::get_if<LinearCoeffs>(&g.tag())) {
        const Eigen::VectorXd& c = lin->coeffs;
        for (std::int64_t k = 0; k <= std::min<std::int64_t>(k_last, c.size() - 1); ++k)
            out[k] = c.tail(c.size() - k).norm() / std::sqrt(12.0);
        return out;
    }
    if (spec.kind == ChainKind::Bernoulli) {
        DyadicFunction cur = *working_projection(g, opts);
        for (std::int64_t k = 0; k <= k_last; ++k) {
            out[k] = std::sqrt(cur.squared_norm());
            if (cur.level() == 0) {
                // The cell mean of a centered g; rounding noise is not a norm.
                const double m0 = std::abs(cur.values()[0]);
                std::fill(out.begin() + k, out.end(), m0 <= 1e-12 * out[0] ? 0.0 : m0);
                break;
            }
            cur = cur.apply_Q();
        }
        return out;
    }
    for (std::int64_t k = 0; k <= std::min<std::int64_t>(k_last, spec.memory); ++k) {
        Functional qk = g;
        for (std::int64_t j = 0; j < k; ++j) qk = apply_Q(spec, qk, opts);
        out[k] = norm(spec, qk, opts).value;
    }
    return out;
}

std::vector<double> vn_norms(const ChainSpec& spec, const Functional& g, std::int64_t n_last,
                             const TransferOptions& opts) {
    require_kind(spec, g);
    if (n_last < 1) throw std::invalid_argument("vn_norms needs n_last >= 1");
    std::vector<double> out(static_cast<std::size_t>(n_last), 0.0);
    if (g.is_zero()) return out;

    if (const auto* eig = std::get_if<QEigen>(&g.tag())) {
        const double g0 = norm(spec, g, opts).value;
        const double rho = eig->eigenvalue;
        double power = 1.0;
        for (std::int64_t n = 1; n <= n_last; ++n) {
            power *= rho;
            const double factor = rho == 1.0 ? static_cast<double>(n) : (1.0 - power) / (1.0 - rho);
            out[n - 1] = std::abs(factor) * g0;
        }
        return out;
    }
    if (std::holds_alternative<QAnnihilated>(g.tag())) {
        std::fill(out.begin(), out.end(), norm(spec, g, opts).value);
        return out;
    }
    if (const auto* lin = std::get_if<LinearCoeffs>(&g.tag())) {
        const Eigen::VectorXd& c = lin->coeffs;
        Eigen::VectorXd v = Eigen::VectorXd::Zero(c.size());
        for (std::int64_t n = 1; n <= n_last; ++n) {
            if (n - 1 < c.size()) v += shifted_coeffs(c, n - 1);
            out[n - 1] = v.norm() / std::sqrt(12.0);
        }
        return out;
    }
    if (spec.kind == ChainKind::Bernoulli) {
        const auto d = working_projection(g, opts);
        const int L = d->level();
        DyadicFunction cur = *d;
        Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(d->cells());
        std::int64_t n = 1;
        for (; n <= std::min<std::int64_t>(n_last, L + 1); ++n) {
            acc += cur.refined(L).values();
            out[n - 1] = std::sqrt(acc.square().mean());
            cur = cur.apply_Q();
        }
        // Beyond level 0 every further term is the same constant.
        const double m0 = cur.values()[0];
        const double sq = acc.square().mean();
        const double mean = acc.mean();
        for (; n <= n_last; ++n) {
            const double t = static_cast<double>(n - L - 1);
            out[n - 1] = std::sqrt(std::max(0.0, sq + 2.0 * t * m0 * mean + t * t * m0 * m0));
        }
        return out;
    }
    const std::int64_t distinct = std::min<std::int64_t>(n_last, spec.memory + 1);
    for (std::int64_t n = 1; n <= distinct; ++n) out[n - 1] = norm(spec, compute_Vn(spec, g, n, opts), opts).value;
    for (std::int64_t n = distinct + 1; n <= n_last; ++n) out[n - 1] = out[distinct - 1];
    return out;
}

// ---------------------------------------------------------------------------

Resolvent resolvent(const ChainSpec& spec, const Functional& g, double epsilon, double tol,
                    const TransferOptions& opts, ResolventRoute route) {
    require_kind(spec, g);
    if (!(epsilon > 0.0)) throw std::invalid_argument("resolvent needs epsilon > 0");
    if (!(tol > 0.0)) throw std::invalid_argument("resolvent needs tol > 0");
    const double w = 1.0 / (1.0 + epsilon);

    auto closed = [&](Functional h, Functional Qh, int N) {
        return Resolvent{epsilon, std::move(h), std::move(Qh), g, N, 0.0, 0.0,
                         ResolventMethod::ClosedForm};
    };

    if (g.is_zero()) return closed(zero_functional(spec.kind), zero_functional(spec.kind), 0);

    if (route == ResolventRoute::Auto) {
        if (const auto* eig = std::get_if<QEigen>(&g.tag())) {
            Functional h = scaled(g, 1.0 / (1.0 + epsilon - eig->eigenvalue));
            Functional Qh = scaled(h, eig->eigenvalue);
            return closed(std::move(h), std::move(Qh), 0);
        }
        if (std::holds_alternative<QAnnihilated>(g.tag()))
            return closed(scaled(g, w), zero_functional(spec.kind), 1);
        if (const auto* lin = std::get_if<LinearCoeffs>(&g.tag())) {
            // Q^(n-1) shifts the coefficients, and vanishes after size() shifts.
            const Eigen::VectorXd& c = lin->coeffs;
            Eigen::VectorXd d = Eigen::VectorXd::Zero(c.size());
            double wn = w;
            for (Eigen::Index n = 1; n <= c.size(); ++n, wn *= w) d += wn * shifted_coeffs(c, n - 1);
            Functional h = from_linear_coeffs(d, "h_eps(" + g.name() + ")");
            Functional Qh = from_linear_coeffs(shifted_coeffs(d, 1), "Qh_eps(" + g.name() + ")");
            return closed(std::move(h), std::move(Qh), static_cast<int>(c.size()));
        }
    }

    if (spec.kind == ChainKind::Bernoulli && route == ResolventRoute::Auto) {
        const auto src = working_projection(g, opts);
        const int L = src->level();
        DyadicFunction cur = *src;
        Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(src->cells());
        double wn = w;
        for (int n = 1; n <= L + 1; ++n, wn *= w) {
            acc += wn * cur.refined(L).values();
            cur = cur.apply_Q();
        }
        // Q^k of the step function is the constant cell mean for k >= L.
        acc += cur.values()[0] * std::pow(w, L + 1) / epsilon;
        auto h = std::make_shared<const DyadicFunction>(L, std::move(acc));
        auto Qh = std::make_shared<const DyadicFunction>(h->apply_Q());
        const Eigen::ArrayXd residual =
            (1.0 + epsilon) * h->values() - Qh->refined(L).values() - src->values();
        const double residual_norm = std::sqrt(residual.square().mean());
        if (residual_norm > tol)
            throw ConvergenceError("dyadic resolvent residual " + std::to_string(residual_norm) +
                                   " exceeds tolerance");
        Resolvent r{epsilon,
                    from_dyadic(h, "h_eps(" + g.name() + ")"),
                    from_dyadic(Qh, "Qh_eps(" + g.name() + ")"),
                    g.traits().dyadic ? g : from_dyadic(src, "P(" + g.name() + ")"),
                    L + 1,
                    residual_norm,
                    projection_error(spec, g, opts),
                    ResolventMethod::DyadicSeries};
        return r;
    }

    if (spec.kind == ChainKind::Bernoulli) {
        // Pointwise series with exact preimage sums.  Tail after N terms is
        // bounded by ||Q^N g|| / (eps (1 + eps)^N) and ||Q^N g|| <= ||g||.
        const double g_norm = norm(spec, g, opts).value;
        auto qN = [&](int N) {
            if (const auto* eig = std::get_if<QEigen>(&g.tag()))
                return g_norm * std::pow(std::abs(eig->eigenvalue), N);
            if (std::holds_alternative<QAnnihilated>(g.tag())) return N >= 1 ? 0.0 : g_norm;
            return g_norm;
        };
        int N = 1;
        double bound = qN(N) * std::pow(w, N) / epsilon;
        while (bound > tol && N <= opts.k_max) {
            ++N;
            bound = qN(N) * std::pow(w, N) / epsilon;
        }
        if (bound > tol)
            throw BudgetExceeded("pointwise resolvent needs more than k_max + 1 = " +
                                 std::to_string(opts.k_max + 1) + " terms for tol " +
                                 std::to_string(tol));
        const int k_max = opts.k_max;
        auto h_eval = [g, N, w, k_max](std::span<const double> x) {
            double s = 0.0, wn = w;
            for (int n = 1; n <= N; ++n, wn *= w) s += wn * apply_Qk_bernoulli(g, n - 1, x[0], k_max);
            return s;
        };
        Functional h(ChainKind::Bernoulli, h_eval, 0.0, {}, "h_eps(" + g.name() + ")");
        auto Qh_eval = [h](std::span<const double> x) {
            return 0.5 * (h(0.5 * x[0]) + h(0.5 * (1.0 + x[0])));
        };
        Functional Qh(ChainKind::Bernoulli, Qh_eval, 0.0, {}, "Qh_eps(" + g.name() + ")");
        return Resolvent{epsilon, std::move(h), std::move(Qh), g, N, bound, 0.0,
                         ResolventMethod::PointwiseSeries};
    }

    // Lebesgue, untagged: finite series (Q^k g = 0 for k > K) with the same
    // Monte Carlo samples for each power in h and Qh, so the defining equation
    // holds to rounding.
    const int terms = spec.memory + 1;
    auto fresh = fresh_uniforms(opts, spec.state_size());
    auto h_eval = [g, fresh, terms, w](std::span<const double> x) {
        double s = 0.0, wn = w;
        for (int n = 1; n <= terms; ++n, wn *= w) s += wn * lebesgue_conditional(g, *fresh, n - 1, x);
        return s;
    };
    auto Qh_eval = [g, fresh, terms, w](std::span<const double> x) {
        double s = 0.0, wn = w;
        for (int n = 1; n < terms; ++n, wn *= w) s += wn * lebesgue_conditional(g, *fresh, n, x);
        return s;
    };
    Functional h(ChainKind::Lebesgue, h_eval, 0.0, {}, "h_eps(" + g.name() + ")");
    Functional Qh(ChainKind::Lebesgue, Qh_eval, 0.0, {}, "Qh_eps(" + g.name() + ")");
    for (auto* f : {&h, &Qh}) {
        f->traits().provenance = Provenance::MonteCarlo;
        f->traits().mc_samples = opts.conditional_samples;
    }
    return Resolvent{epsilon, std::move(h), std::move(Qh), g, terms, 0.0, 0.0,
                     ResolventMethod::MonteCarloSeries};
}

BivariateFunctional make_H_eps(const ChainSpec& spec, const Resolvent& r, const TransferOptions& opts) {
    BivariateFunctional H;
    H.eval = [h = r.h, Qh = r.Qh](std::span<const double> x0, std::span<const double> x1) {
        return h(x1) - Qh(x0);
    };
    if (r.method != ResolventMethod::PointwiseSeries) H.norm1 = norm1_H(spec, r, opts).value;
    return H;
}

NormEstimate increment_norm1(const ChainSpec& spec, const Functional& h, const TransferOptions& opts) {
    require_kind(spec, h);
    if (h.is_zero()) return {0.0, 0.0, NormMethod::Exact, 0};
    if (const auto* lin = std::get_if<LinearCoeffs>(&h.tag()))
        return {std::abs(lin->coeffs[0]) / std::sqrt(12.0), 0.0, NormMethod::Exact, 0};
    if (const auto& d = h.traits().dyadic) {
        const double radicand = d->squared_norm() - d->apply_Q().squared_norm();
        if (radicand < -1e-12 * d->squared_norm())
            throw ConsistencyError("||h||^2 - ||Qh||^2 is negative");
        return {std::sqrt(std::max(0.0, radicand)), 0.0, NormMethod::DyadicQuadrature, d->level()};
    }
    const NormEstimate hn = norm(spec, h, opts);
    if (const auto* eig = std::get_if<QEigen>(&h.tag())) {
        const double rho = eig->eigenvalue;
        NormEstimate out = hn;
        out.value = hn.value * std::sqrt(std::max(0.0, 1.0 - rho * rho));
        out.std_error = hn.std_error * std::sqrt(std::max(0.0, 1.0 - rho * rho));
        return out;
    }
    if (std::holds_alternative<QAnnihilated>(h.tag())) return hn;

    const NormEstimate qn = norm(spec, apply_Q(spec, h, opts), opts);
    const double a = hn.value * hn.value;
    const double b = qn.value * qn.value;
    const double err_sq = 2.0 * (hn.value * hn.std_error + qn.value * qn.std_error);
    if (a - b < -(1e-9 * a + 3.0 * err_sq))
        throw ConsistencyError("||h||^2 - ||Qh||^2 is negative beyond numerical tolerance");
    return squared_to_norm(a - b, err_sq, hn.method, hn.samples_or_level);
}

NormEstimate norm1_H(const ChainSpec& spec, const Resolvent& r, const TransferOptions& opts) {
    return increment_norm1(spec, r.h, opts);
}

Estimate norm1_squared_monte_carlo(const ChainSpec& spec, const BivariateFunctional& H,
                                   std::int64_t samples, RngStream& rng) {
    if (samples < 2) throw std::invalid_argument("Monte Carlo needs >= 2 samples");
    double mean = 0.0, m2 = 0.0;
    for (std::int64_t i = 0; i < samples; ++i) {
        const State x0 = sample_stationary(spec, rng);
        const State x1 = step(spec, x0, rng);
        const double v = H(std::span<const double>(x0.data(), x0.size()),
                           std::span<const double>(x1.data(), x1.size()));
        const double sq = v * v;
        const double d = sq - mean;
        mean += d / static_cast<double>(i + 1);
        m2 += d * (sq - mean);
    }
    return {mean, std::sqrt(m2 / static_cast<double>(samples - 1) / static_cast<double>(samples))};
}

std::vector<double> dyadic_eps_grid(int first, int last) {
    std::vector<double> grid;
    for (int j = first; j <= last; ++j) grid.push_back(std::ldexp(1.0, -j));
    return grid;
}

HLimitEstimate estimate_H_limit(const ChainSpec& spec, const Functional& g,
                                std::span<const double> eps_grid, const TransferOptions& opts) {
    require_kind(spec, g);
    if (eps_grid.empty()) throw std::invalid_argument("empty eps grid");
    for (std::size_t j = 0; j < eps_grid.size(); ++j) {
        if (!(eps_grid[j] > 0.0)) throw std::invalid_argument("eps grid must be positive");
        if (j > 0 && !(eps_grid[j] < eps_grid[j - 1]))
            throw std::invalid_argument("eps grid must be strictly decreasing");
    }

    HLimitEstimate out;
    out.eps.assign(eps_grid.begin(), eps_grid.end());
    out.projection_error = projection_error(spec, g, opts);
    std::optional<Functional> prev_h;
    for (std::size_t j = 0; j < eps_grid.size(); ++j) {
        const Resolvent r = resolvent(spec, g, eps_grid[j], opts.resolvent_tol, opts);
        const NormEstimate Hn = norm1_H(spec, r, opts);
        const double hn = norm(spec, r.h, opts).value;
        out.H_norms.push_back(Hn.value);
        out.h_norms.push_back(hn);
        if (prev_h) {
            const Functional diff = combine(1.0, r.h, -1.0, *prev_h);
            const double d = increment_norm1(spec, diff, opts).value;
            const double lhs = d * d;
            const double rhs = (eps_grid[j] + eps_grid[j - 1]) *
                               (hn * hn + out.h_norms[j - 1] * out.h_norms[j - 1]);
            out.cauchy_diffs.push_back(d);
            out.r2_lhs.push_back(lhs);
            out.r2_rhs.push_back(rhs);
            out.r2_holds = out.r2_holds && lhs <= rhs * (1.0 + 1e-9) + 1e-15;
            if (out.cauchy_diffs.size() > 1)
                out.diffs_monotone = out.diffs_monotone &&
                                     d < out.cauchy_diffs[out.cauchy_diffs.size() - 2];
        }
        if (j == eps_grid.size() - 1) out.H_norm = Hn;
        prev_h = r.h;
    }

    // Geometric extrapolation of the remaining Cauchy increments.
    const auto& d = out.cauchy_diffs;
    if (d.size() >= 2) {
        const double last = d.back();
        const double ratio = d[d.size() - 2] > 0 ? last / d[d.size() - 2] : 0.0;
        out.tail_budget = last == 0.0 ? 0.0
                          : ratio < 1.0 ? last * ratio / (1.0 - ratio)
                                        : std::numeric_limits<double>::infinity();
    }
    out.H_norm.std_error = std::max(out.H_norm.std_error, out.tail_budget);
    return out;
}

// ---------------------------------------------------------------------------

GrowthFit fit_log_log(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_log_log needs >= 2 pairs");
    GrowthFit fit;
    fit.x_min = *std::min_element(x.begin(), x.end());
    fit.x_max = *std::max_element(x.begin(), x.end());
    const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
    if (*ymin <= 0.0 || *ymax - *ymin <= 1e-14 * std::abs(*ymax)) {
        fit.alpha_hat = 0.0;
        fit.intercept = *ymax > 0.0 ? std::log(*ymax) : 0.0;
        fit.r_squared = std::numeric_limits<double>::quiet_NaN();
        fit.r_squared_applicable = false;
        return fit;
    }
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd A(n, 2);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        A(i, 0) = 1.0;
        A(i, 1) = std::log(x[i]);
        b[i] = std::log(y[i]);
    }
    const Eigen::Vector2d coef = A.colPivHouseholderQr().solve(b);
    fit.intercept = coef[0];
    fit.alpha_hat = coef[1];
    const double ss_res = (b - A * coef).squaredNorm();
    const double ss_tot = (b.array() - b.mean()).square().sum();
    fit.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 0.0;
    return fit;
}

std::vector<std::int64_t> default_growth_grid() {
    std::vector<std::int64_t> grid;
    for (int j = 4; j <= 16; ++j) grid.push_back(std::int64_t{1} << j);
    return grid;
}

GrowthFit fit_growth(const ChainSpec& spec, const Functional& g, std::span<const std::int64_t> n_grid,
                     const TransferOptions& opts) {
    if (n_grid.size() < 4) throw std::invalid_argument("fit_growth needs >= 4 grid points");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        if (n_grid[i] < 1) throw std::invalid_argument("fit_growth grid must be >= 1");
        if (i > 0 && n_grid[i] <= n_grid[i - 1])
            throw std::invalid_argument("fit_growth grid must be increasing");
    }
    const std::vector<double> all = vn_norms(spec, g, n_grid.back(), opts);
    std::vector<double> x, y;
    for (const auto n : n_grid) {
        x.push_back(static_cast<double>(n));
        y.push_back(all[static_cast<std::size_t>(n - 1)]);
    }
    return fit_log_log(x, y);
}

GrowthFit fit_resolvent_growth(const ChainSpec& spec, const Functional& g,
                               std::span<const double> eps_grid, const TransferOptions& opts) {
    if (eps_grid.size() < 4) throw std::invalid_argument("fit_resolvent_growth needs >= 4 grid points");
    std::vector<double> x, y;
    for (const double eps : eps_grid) {
        const Resolvent r = resolvent(spec, g, eps, opts.resolvent_tol, opts);
        x.push_back(1.0 / eps);
        y.push_back(norm(spec, r.h, opts).value);
    }
    return fit_log_log(x, y);
}

GrowthCheck check_growth(const ChainSpec& spec, const Functional& g,
                         std::span<const std::int64_t> n_grid, std::span<const double> eps_grid,
                         double tolerance, const TransferOptions& opts) {
    GrowthCheck c;
    c.vn = fit_growth(spec, g, n_grid, opts);
    c.resolvent = fit_resolvent_growth(spec, g, eps_grid, opts);
    c.consistent = c.resolvent.alpha_hat <= c.vn.alpha_hat + tolerance;
    return c;
}

}  // namespace mwlil
