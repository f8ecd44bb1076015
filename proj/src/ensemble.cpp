#include "mwlil/ensemble.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "mwlil/decomposition.hpp"
#include "mwlil/parallel.hpp"
#include "mwlil/path.hpp"

namespace mwlil {

namespace {

std::span<const double> view(const State& x) {
    return {x.data(), static_cast<std::size_t>(x.size())};
}

}  // namespace

EnsembleReport run_ensemble(const EnsembleConfig& cfg) {
    check_compatible(cfg.spec, cfg.g);
    if (cfg.n < 1) throw std::invalid_argument("ensemble needs n >= 1");
    if (cfg.paths < 1) throw std::invalid_argument("ensemble needs at least one path");
    if (cfg.lil && cfg.n < cfg.n0) throw std::invalid_argument("path length below the LIL start n0");

    std::vector<std::int64_t> checkpoints = cfg.checkpoints.empty() ? default_checkpoints(cfg.n)
                                                                    : cfg.checkpoints;
    for (std::size_t j = 0; j < checkpoints.size(); ++j) {
        if (checkpoints[j] < 1 || checkpoints[j] > cfg.n)
            throw std::invalid_argument("checkpoints must lie in [1, n]");
        if (j > 0 && checkpoints[j] <= checkpoints[j - 1])
            throw std::invalid_argument("checkpoints must be increasing");
    }
    std::vector<std::int64_t> lil_checkpoints;
    for (auto c : checkpoints)
        if (c >= cfg.n0) lil_checkpoints.push_back(c);

    EnsembleReport rep;
    rep.seeds = cfg.paths;
    rep.n = cfg.n;
    const auto nc = static_cast<Eigen::Index>(checkpoints.size());
    for (auto* s : {&rep.S_samples, &rep.R_samples, &rep.scheduled_R_samples}) {
        s->checkpoints = checkpoints;
        s->values = Eigen::MatrixXd::Zero(cfg.paths, nc);
    }
    rep.per_path.resize(static_cast<std::size_t>(cfg.paths));

    std::optional<Resolvent> r_min;
    std::vector<const Resolvent*> scheduled(checkpoints.size(), nullptr);
    std::map<int, Resolvent> by_k;
    if (cfg.decompose) {
        const auto grid = cfg.eps_grid.empty() ? dyadic_eps_grid(1, 12) : cfg.eps_grid;
        rep.H_limit = estimate_H_limit(cfg.spec, cfg.g, grid, cfg.opts);
        rep.H_norm_ref = rep.H_limit->H_norm.value;
        r_min = resolvent(cfg.spec, cfg.g, grid.back(), cfg.opts.resolvent_tol, cfg.opts);
        for (std::size_t j = 0; j < checkpoints.size(); ++j) {
            const EpsSchedule e = eps_schedule(checkpoints[j]);
            auto it = by_k.find(e.k);
            if (it == by_k.end())
                it = by_k.emplace(e.k, resolvent(cfg.spec, cfg.g, e.eps, cfg.opts.resolvent_tol, cfg.opts)).first;
            scheduled[j] = &it->second;
        }
    }

    const int threads = resolve_threads(cfg.threads);
    parallel_for(cfg.paths, threads, [&](std::int64_t p) {
        RngStream rng(cfg.seed, static_cast<std::uint64_t>(p));
        State x = sample_stationary(cfg.spec, rng);
        const State x0 = x;
        const bool bern = cfg.spec.kind == ChainKind::Bernoulli;
        std::optional<LilTracker> lil;
        if (cfg.lil) lil.emplace(cfg.n0, lil_checkpoints, cfg.n);

        double S = 0.0, M = 0.0, H2 = 0.0;
        double Qh_prev = r_min ? r_min->Qh(view(x)) : 0.0;
        std::size_t next = 0;
        for (std::int64_t i = 1; i <= cfg.n; ++i) {
            if (bern)
                x[0] = bernoulli_step(x[0], rng.bit());
            else
                shift_window(x, rng.uniform());
            const auto xv = view(x);
            S += cfg.g(xv);
            if (r_min) {
                const double Qh = r_min->Qh(xv);
                const double H = r_min->h(xv) - Qh_prev;
                M += H;
                H2 += H * H;
                Qh_prev = Qh;
            }
            if (lil) lil->push(S);
            if (next < checkpoints.size() && i == checkpoints[next]) {
                rep.S_samples.values(p, next) = S;
                if (r_min) {
                    rep.R_samples.values(p, next) = S - M;
                    const Resolvent& r = *scheduled[next];
                    rep.scheduled_R_samples.values(p, next) = r.Qh(view(x0)) - r.Qh(xv);
                }
                ++next;
            }
        }
        PathSummary& s = rep.per_path[static_cast<std::size_t>(p)];
        s.stream_id = static_cast<std::uint64_t>(p);
        s.S_n = S;
        s.ergodic_H2 = H2 / static_cast<double>(cfg.n);
        s.limit_R_n = S - M;
        if (lil) {
            const LilStatistic st = lil->result();
            s.running_sup = st.running_sup;
            s.running_sup_abs = st.running_sup_abs;
        }
    });

    if (cfg.lil) {
        std::vector<double> sup, sup_abs;
        for (const auto& s : rep.per_path) {
            sup.push_back(s.running_sup);
            sup_abs.push_back(s.running_sup_abs);
        }
        for (double q : rep.quantile_levels) {
            rep.lil_quantiles.push_back(quantile(sup, q));
            rep.lil_abs_quantiles.push_back(quantile(sup_abs, q));
        }
    }
    if (!checkpoints.empty()) {
        rep.variance_curve = variance_scaling(rep.S_samples, rep.H_norm_ref);
        if (cfg.decompose)
            rep.remainder_curve = remainder_decay(rep.R_samples, rep.S_samples);
        else
            rep.variance_curve.verdict = CheckVerdict::Inconclusive;  // no reference value
    }
    if (cfg.decompose) {
        for (Eigen::Index j = 0; j < nc; ++j)
            rep.scheduled_R2.push_back(rep.scheduled_R_samples.values.col(j).array().square().mean());
        double mean = 0.0, m2 = 0.0;
        for (std::size_t p = 0; p < rep.per_path.size(); ++p) {
            const double v = rep.per_path[p].ergodic_H2;
            const double d = v - mean;
            mean += d / static_cast<double>(p + 1);
            m2 += d * (v - mean);
        }
        const double m = static_cast<double>(rep.per_path.size());
        rep.ergodic_H2 = {mean, m > 1 ? std::sqrt(m2 / (m - 1.0) / m) : 0.0};
    }
    return rep;
}

}  // namespace mwlil
