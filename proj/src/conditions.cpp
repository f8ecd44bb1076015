#include "mwlil/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mwlil/dyadic.hpp"

namespace mwlil {

std::string_view to_string(ConditionId id) {
    switch (id) {
        case ConditionId::MW102: return "MW102";
        case ConditionId::Cor211: return "Cor211";
        case ConditionId::Cor212: return "Cor212";
        case ConditionId::Bern301: return "Bern301";
        case ConditionId::Leb302Series: return "Leb302Series";
    }
    return "?";
}

ConditionId parse_condition_id(std::string_view text) {
    for (auto id : {ConditionId::MW102, ConditionId::Cor211, ConditionId::Cor212,
                    ConditionId::Bern301, ConditionId::Leb302Series})
        if (text == to_string(id)) return id;
    throw std::invalid_argument("unknown condition '" + std::string(text) + "'");
}

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::ConvergentEvidence: return "ConvergentEvidence";
        case Verdict::DivergentEvidence: return "DivergentEvidence";
        case Verdict::Inconclusive: return "Inconclusive";
    }
    return "?";
}

SeriesVerdict series_verdict(const std::vector<double>& terms) {
    SeriesVerdict out;
    const auto N = static_cast<std::int64_t>(terms.size());
    if (N < 4) return out;
    const std::int64_t half = N / 2;

    std::vector<double> x, y;
    for (std::int64_t k = half; k <= N; ++k) {
        const double t = terms[k - 1];
        if (t < 0.0) throw std::invalid_argument("series_verdict needs nonnegative terms");
        if (t > 0.0) {
            x.push_back(static_cast<double>(k));
            y.push_back(t);
        }
    }
    if (x.empty()) {
        out.verdict = Verdict::ConvergentEvidence;
        out.tail_estimate = 0.0;
        return out;
    }
    if (x.size() < 3) return out;

    const GrowthFit fit = fit_log_log(x, y);
    const double p = -fit.alpha_hat;
    out.decay_exponent = p;
    if (p <= 1.0) {
        out.verdict = Verdict::DivergentEvidence;
        return out;
    }
    double total = 0.0, last_doubling = 0.0;
    for (std::int64_t k = 1; k <= N; ++k) {
        total += terms[k - 1];
        if (k > half) last_doubling += terms[k - 1];
    }
    const double tail = terms[N - 1] * static_cast<double>(N) / (p - 1.0);
    out.tail_estimate = tail;
    if (total > 0.0 && last_doubling < 1e-3 * total) out.verdict = Verdict::ConvergentEvidence;
    return out;
}

namespace {

void fill_partial_sums(ConditionReport& r) {
    r.partial_sums.resize(r.terms.size());
    double s = 0.0;
    for (std::size_t i = 0; i < r.terms.size(); ++i) r.partial_sums[i] = s += r.terms[i];
    r.partial_sum = s;
    r.terms_computed = static_cast<std::int64_t>(r.terms.size());
}

void apply_series_verdict(ConditionReport& r) {
    const SeriesVerdict v = series_verdict(r.terms);
    r.verdict = v.verdict;
    r.tail_estimate = v.tail_estimate;
    r.decay_exponent = v.decay_exponent;
}

// Number of Q^k terms that are trustworthy for g.
std::int64_t qk_term_count(const ChainSpec& spec, const Functional& g, std::int64_t max_terms,
                           const TransferOptions& opts, std::string& note) {
    if (std::holds_alternative<std::monostate>(g.tag()) && !g.is_zero() &&
        spec.kind == ChainKind::Bernoulli) {
        const int level = g.traits().dyadic ? g.traits().dyadic->level() : opts.dyadic_level;
        note = "Q^k g from the level-" + std::to_string(level) +
               " dyadic projection; terms limited to k <= level/2";
        return std::min<std::int64_t>(max_terms, std::max(level / 2, 4));
    }
    return max_terms;
}

ConditionReport series_condition(const ChainSpec& spec, const Functional& g, ConditionId id,
                                 double delta, const ConditionBudget& budget,
                                 const TransferOptions& opts) {
    ConditionReport r;
    r.id = id;
    r.delta = delta;
    if (budget.max_terms < 4) throw std::invalid_argument("condition budget needs >= 4 terms");

    if (id == ConditionId::MW102) {
        const std::vector<double> v = vn_norms(spec, g, budget.max_terms, opts);
        r.terms.resize(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double n = static_cast<double>(i + 1);
            r.terms[i] = v[i] / (n * std::sqrt(n));
        }
        if (std::holds_alternative<std::monostate>(g.tag()) && !g.is_zero() &&
            spec.kind == ChainKind::Bernoulli)
            r.note = "V_n g from the dyadic projection, projection error " +
                     std::to_string(projection_error(spec, g, opts));
        if (spec.kind == ChainKind::Lebesgue &&
            std::holds_alternative<std::monostate>(g.tag()))
            r.note = "Monte Carlo norms";
    } else {
        const std::int64_t count = qk_term_count(spec, g, budget.max_terms, opts, r.note);
        const std::vector<double> q = qk_norms(spec, g, count, opts);
        r.terms.resize(static_cast<std::size_t>(count));
        for (std::int64_t k = 1; k <= count; ++k) {
            const double kk = static_cast<double>(k);
            const double nk = q[static_cast<std::size_t>(k)];
            r.terms[k - 1] = id == ConditionId::Cor211 ? std::pow(kk, delta - 0.5) * nk
                                                       : std::pow(kk, delta) * nk * nk;
        }
    }
    fill_partial_sums(r);
    apply_series_verdict(r);
    return r;
}

ConditionReport leb302(const ChainSpec& spec, const Functional& g, double delta) {
    ConditionReport r;
    r.id = ConditionId::Leb302Series;
    r.delta = delta;
    if (spec.kind != ChainKind::Lebesgue)
        throw std::invalid_argument("Leb302Series applies to the Lebesgue chain");
    const auto* lin = std::get_if<LinearCoeffs>(&g.tag());
    if (!lin && !g.is_zero())
        throw std::invalid_argument("Leb302Series needs a functional with linear coefficients");
    const Eigen::VectorXd c = lin ? lin->coeffs : Eigen::VectorXd();
    for (Eigen::Index k = 1; k < c.size(); ++k)
        r.terms.push_back(std::pow(static_cast<double>(k), 1.0 + delta) * c[k] * c[k] / 12.0);
    fill_partial_sums(r);

    // The chain keeps K + 1 coordinates, so the sum is exact; the family the
    // coefficients come from may still diverge.
    r.verdict = Verdict::ConvergentEvidence;
    r.tail_estimate = 0.0;
    if (const auto& q = g.traits().coefficient_decay) {
        const double K = static_cast<double>(std::max<Eigen::Index>(c.size() - 1, 1));
        const double gap = 2.0 * *q - 2.0 - delta;
        r.decay_exponent = 2.0 * *q - 1.0 - delta;
        if (gap <= 0.0) {
            r.verdict = Verdict::DivergentEvidence;
            r.tail_estimate.reset();
            r.note = "exact over the window; the untruncated coefficient family diverges";
        } else {
            r.tail_estimate = std::pow(K, -gap) / (12.0 * gap);
            r.note = "tail bound for the untruncated coefficient family";
        }
    }
    return r;
}

ConditionReport bern301(const ChainSpec& spec, const Functional& g, double delta,
                        const ConditionBudget& budget, const TransferOptions& opts) {
    ConditionReport r;
    r.id = ConditionId::Bern301;
    r.delta = delta;
    if (spec.kind != ChainKind::Bernoulli)
        throw std::invalid_argument("Bern301 applies to the Bernoulli chain");
    const std::int64_t m = budget.max_samples;
    if (m < 100) throw std::invalid_argument("Bern301 needs >= 100 samples");

    // Importance sampling with common random numbers across bands: the
    // smaller point x has density (1 - gamma) x^-gamma, the gap d is
    // log-uniform on [band, 1], and y = x + d.
    constexpr double gamma = 0.9;
    const std::vector<double> bands{1e-6, 1e-5, 1e-7};
    const std::size_t nb = bands.size();
    std::vector<double> mean(nb, 0.0), m2(nb, 0.0);
    std::vector<double> dmean(nb, 0.0), dm2(nb, 0.0);  // paired differences to the primary band
    RngStream rng(opts.mc_seed, 301);
    std::vector<double> est(nb);
    for (std::int64_t i = 0; i < m; ++i) {
        const double v = 1.0 - rng.uniform();
        const double x = std::pow(v, 1.0 / (1.0 - gamma));
        const double u = rng.uniform();
        const double gx = g(x);
        for (std::size_t b = 0; b < nb; ++b) {
            const double log_inv = -std::log(bands[b]);
            const double d = std::exp(-u * log_inv);
            const double y = x + d;
            double e = 0.0;
            if (y <= 1.0) {
                const double diff = gx - g(y);
                e = 2.0 * log_inv * diff * diff * std::pow(-std::log(d), delta) *
                    std::pow(x, gamma) / (1.0 - gamma);
            }
            est[b] = e;
        }
        const double w = 1.0 / static_cast<double>(i + 1);
        for (std::size_t b = 0; b < nb; ++b) {
            double dd = est[b] - mean[b];
            mean[b] += dd * w;
            m2[b] += dd * (est[b] - mean[b]);
            const double pd = est[b] - est[0];
            dd = pd - dmean[b];
            dmean[b] += dd * w;
            dm2[b] += dd * (pd - dmean[b]);
        }
    }
    const double mm = static_cast<double>(m);
    bool stable = true;
    for (std::size_t b = 0; b < nb; ++b) {
        const double se = std::sqrt(m2[b] / (mm - 1.0) / mm);
        r.bands.push_back({bands[b], mean[b], se});
        if (b > 0) {
            const double dse = std::sqrt(dm2[b] / (mm - 1.0) / mm);
            if (std::abs(dmean[b]) > 0.01 * std::abs(mean[0]) + 3.0 * dse) stable = false;
        }
    }
    r.partial_sum = mean[0];
    r.std_error = r.bands[0].std_error;
    r.terms_computed = m;
    r.verdict = stable && std::isfinite(mean[0]) ? Verdict::ConvergentEvidence : Verdict::Inconclusive;
    r.note = stable ? "estimates agree across bands" : "estimates move with the band width";
    return r;
}

}  // namespace

ConditionReport check_condition(const ChainSpec& spec, const Functional& g, ConditionId id,
                                double delta, const ConditionBudget& budget,
                                const TransferOptions& opts) {
    if (spec.kind != g.chain_kind())
        throw std::invalid_argument("functional '" + g.name() + "' does not live on " +
                                    spec.describe());
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw std::invalid_argument("delta must be >= 0");
    switch (id) {
        case ConditionId::MW102:
        case ConditionId::Cor211:
        case ConditionId::Cor212: return series_condition(spec, g, id, delta, budget, opts);
        case ConditionId::Bern301: return bern301(spec, g, delta, budget, opts);
        case ConditionId::Leb302Series: return leb302(spec, g, delta);
    }
    throw std::invalid_argument("unknown condition");
}

}  // namespace mwlil
