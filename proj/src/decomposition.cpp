#include "mwlil/decomposition.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mwlil {

EpsSchedule eps_schedule(std::int64_t n) {
    if (n < 1) throw std::invalid_argument("eps_schedule needs n >= 1");
    const int k = static_cast<int>(std::bit_width(static_cast<std::uint64_t>(n)));
    return {n, k, std::ldexp(1.0, -k)};
}

namespace {

std::span<const double> column(const Path& path, Eigen::Index i) {
    return {path.states.col(i).data(), static_cast<std::size_t>(path.states.rows())};
}

void require_states(const Path& path) {
    if (!path.has_states()) throw std::invalid_argument("decomposition needs retained states");
}

}  // namespace

DecompositionTrace decompose_at_eps(const Path& path, const Resolvent& r) {
    require_states(path);
    if (path.spec.kind != r.h.chain_kind())
        throw std::invalid_argument("resolvent and path live on different chains");
    const Eigen::Index n = path.n;
    const double eps = r.epsilon;

    DecompositionTrace t;
    t.n = n;
    t.epsilon = eps;
    t.S = path.partial_sums;
    t.S_source.resize(n);
    t.M_eps.resize(n);
    t.R_eps.resize(n);
    t.drift.resize(n);

    const double Qh0 = r.Qh(column(path, 0));
    double Qh_prev = Qh0;
    double s = 0.0, m = 0.0, hsum = 0.0;
    double max_abs_s = 0.0;
    for (Eigen::Index i = 1; i <= n; ++i) {
        const auto x = column(path, i);
        const double h = r.h(x);
        const double Qh = r.Qh(x);
        s += r.source(x);
        m += h - Qh_prev;
        hsum += h;
        t.S_source[i - 1] = s;
        t.M_eps[i - 1] = m;
        t.drift[i - 1] = eps * hsum;
        t.R_eps[i - 1] = Qh0 - Qh;
        Qh_prev = Qh;
        max_abs_s = std::max(max_abs_s, std::abs(s));
        t.identity_residual = std::max(
            t.identity_residual, std::abs(s - t.M_eps[i - 1] - t.drift[i - 1] - t.R_eps[i - 1]));
        t.source_discrepancy = std::max(t.source_discrepancy, std::abs(t.S[i - 1] - s));
    }
    t.identity_tolerance = 1e-9 * std::max(1.0, max_abs_s);
    return t;
}

DecompositionTrace limit_decompose(const Path& path, const Resolvent& r_min, double budget) {
    DecompositionTrace t = decompose_at_eps(path, r_min);
    t.limit_M = t.M_eps;
    t.limit_R = t.S - t.M_eps;
    t.limit_budget = budget;
    return t;
}

DecompositionTrace limit_decompose(const Path& path, const ChainSpec& spec, const Functional& g,
                                   double eps_min, const TransferOptions& opts) {
    if (!(eps_min > 0.0 && eps_min < 0.5)) throw std::invalid_argument("eps_min must lie in (0, 1/2)");
    std::vector<double> grid;
    for (double e = 0.5; e >= eps_min * (1.0 - 1e-12); e *= 0.5) grid.push_back(e);
    const HLimitEstimate est = estimate_H_limit(spec, g, grid, opts);
    const Resolvent r = resolvent(spec, g, grid.back(), opts.resolvent_tol, opts);
    return limit_decompose(path, r, est.tail_budget);
}

MartingaleDiagnostic martingale_check(std::span<const double> increments,
                                      std::span<const double> conditioning) {
    if (increments.size() != conditioning.size())
        throw std::invalid_argument("martingale_check needs one conditioning value per increment");
    constexpr std::size_t kBins = 20;
    constexpr std::int64_t kMinPerBin = 100;
    MartingaleDiagnostic d;
    const std::size_t n = increments.size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return conditioning[a] < conditioning[b]; });

    bool all_ok = true;
    for (std::size_t b = 0; b < kBins; ++b) {
        const std::size_t lo = b * n / kBins, hi = (b + 1) * n / kBins;
        BinStat s;
        s.count = static_cast<std::int64_t>(hi - lo);
        if (s.count > 0) {
            s.lo = conditioning[order[lo]];
            s.hi = conditioning[order[hi - 1]];
        }
        double mean = 0.0, m2 = 0.0;
        for (std::size_t j = lo; j < hi; ++j) {
            const double v = increments[order[j]];
            const double delta = v - mean;
            mean += delta / static_cast<double>(j - lo + 1);
            m2 += delta * (v - mean);
        }
        s.mean = mean;
        s.std_error = s.count > 1 ? std::sqrt(m2 / static_cast<double>(s.count - 1) /
                                              static_cast<double>(s.count))
                                  : 0.0;
        if (s.std_error > 0.0) d.max_abs_z = std::max(d.max_abs_z, std::abs(mean) / s.std_error);
        if (std::abs(mean) > 4.0 * s.std_error) all_ok = false;
        d.bins.push_back(s);
    }

    if (n >= (std::size_t{1} << 16)) {
        d.stationarity_checked = true;
        auto var = [&](std::size_t lo, std::size_t hi) {
            double mean = 0.0, m2 = 0.0;
            for (std::size_t j = lo; j < hi; ++j) {
                const double delta = increments[j] - mean;
                mean += delta / static_cast<double>(j - lo + 1);
                m2 += delta * (increments[j] - mean);
            }
            return m2 / static_cast<double>(hi - lo - 1);
        };
        const double v1 = var(0, n / 2), v2 = var(n / 2, n);
        d.variance_ratio = v2 > 0.0 ? v1 / v2 : (v1 > 0.0 ? HUGE_VAL : 1.0);
        if (d.variance_ratio < 0.9 || d.variance_ratio > 1.1) all_ok = false;
    }

    if (n < kBins * static_cast<std::size_t>(kMinPerBin))
        d.verdict = CheckVerdict::Inconclusive;
    else
        d.verdict = all_ok ? CheckVerdict::Pass : CheckVerdict::Fail;
    return d;
}

MartingaleDiagnostic martingale_check(const DecompositionTrace& trace, const Path& path) {
    require_states(path);
    if (trace.n != path.n) throw std::invalid_argument("trace and path lengths differ");
    const Eigen::Index n = path.n;
    std::vector<double> inc(static_cast<std::size_t>(n)), cond(static_cast<std::size_t>(n));
    const Eigen::Index newest = path.states.rows() - 1;
    for (Eigen::Index i = 0; i < n; ++i) {
        inc[i] = trace.M_eps[i] - (i > 0 ? trace.M_eps[i - 1] : 0.0);
        cond[i] = path.states(newest, i);
    }
    return martingale_check(inc, cond);
}

}  // namespace mwlil
