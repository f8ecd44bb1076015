#include "mwlil/lil.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include "mwlil/rng.hpp"

namespace mwlil {

std::shared_ptr<const std::vector<double>> lil_inverse_normalizers(std::int64_t N) {
    static std::mutex mutex;
    static std::shared_ptr<const std::vector<double>> cached;
    std::lock_guard lock(mutex);
    if (cached && static_cast<std::int64_t>(cached->size()) > N) return cached;
    auto t = std::make_shared<std::vector<double>>(static_cast<std::size_t>(N + 1), 0.0);
    for (std::int64_t n = 3; n <= N; ++n) {
        const double dn = static_cast<double>(n);
        (*t)[static_cast<std::size_t>(n)] = 1.0 / std::sqrt(2.0 * dn * std::log(std::log(dn)));
    }
    cached = t;
    return cached;
}

LilTracker::LilTracker(std::int64_t n0, std::vector<std::int64_t> checkpoints, std::int64_t capacity)
    : n0_(n0), inv_(lil_inverse_normalizers(capacity)) {
    if (n0 < 3) throw std::invalid_argument("LIL statistics need n0 >= 3");
    if (capacity < n0) throw std::invalid_argument("path shorter than n0");
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        if (checkpoints[i] < n0 || checkpoints[i] > capacity)
            throw std::invalid_argument("checkpoints must lie in [n0, N]");
        if (i > 0 && checkpoints[i] <= checkpoints[i - 1])
            throw std::invalid_argument("checkpoints must be increasing");
    }
    stat_.n0 = n0;
    stat_.checkpoints = std::move(checkpoints);
    // Suprema start below any attainable ratio.
    stat_.running_sup = -HUGE_VAL;
    stat_.running_sup_abs = 0.0;
}

void LilTracker::record(double S) {
    stat_.sup_at.push_back(stat_.running_sup);
    stat_.sup_abs_at.push_back(stat_.running_sup_abs);
    stat_.ratio_at.push_back(S * (*inv_)[static_cast<std::size_t>(n_)]);
    ++next_;
}

LilStatistic LilTracker::result() const {
    if (n_ < n0_) throw std::logic_error("LilTracker saw fewer than n0 partial sums");
    LilStatistic out = stat_;
    out.N = n_;
    out.checkpoints.resize(out.sup_at.size());
    return out;
}

LilStatistic lil_statistic(std::span<const double> partial_sums, std::int64_t n0,
                           std::span<const std::int64_t> checkpoints) {
    const auto N = static_cast<std::int64_t>(partial_sums.size());
    LilTracker t(n0, {checkpoints.begin(), checkpoints.end()}, N);
    for (const double s : partial_sums) t.push(s);
    return t.result();
}

LilStatistic lil_statistic(const Path& path, std::int64_t n0, std::span<const std::int64_t> checkpoints) {
    return lil_statistic(std::span<const double>(path.partial_sums.data(),
                                                 static_cast<std::size_t>(path.partial_sums.size())),
                         n0, checkpoints);
}

std::vector<std::int64_t> default_checkpoints(std::int64_t N) {
    std::vector<std::int64_t> c;
    for (std::int64_t n = 256; n <= N; n *= 4) c.push_back(n);
    return c;
}

StoutReport stout_check(std::span<const double> increments, std::span<const std::int64_t> horizons,
                        std::int64_t n0) {
    StoutReport r;
    double sq = 0.0;
    for (const double y : increments) sq += y * y;
    r.second_moment = increments.empty() ? 0.0 : sq / static_cast<double>(increments.size());
    if (!(r.second_moment > 0.0))
        throw std::invalid_argument("stout_check needs increments with unit variance, got zero");
    r.variance_warning = std::abs(r.second_moment - 1.0) > 0.05;

    const auto N = static_cast<std::int64_t>(increments.size());
    std::vector<std::int64_t> hs(horizons.begin(), horizons.end());
    LilTracker t(n0, hs, N);
    double s = 0.0;
    for (const double y : increments) t.push(s += y);
    const LilStatistic stat = t.result();
    r.horizons = stat.checkpoints;
    r.running_sup_abs = stat.sup_abs_at;
    return r;
}

StoutTrend stout_trend(std::span<const StoutReport> reports) {
    StoutTrend t;
    if (reports.empty()) return t;
    t.horizons = reports.front().horizons;
    for (std::size_t h = 0; h < t.horizons.size(); ++h) {
        std::vector<double> v;
        for (const auto& r : reports) {
            if (r.horizons != t.horizons) throw std::invalid_argument("reports use different horizons");
            v.push_back(r.running_sup_abs[h]);
        }
        t.medians.push_back(median(std::move(v)));
        if (h > 0 && t.medians[h] < t.medians[h - 1]) t.nondecreasing = false;
    }
    for (const auto& r : reports) t.variance_warnings += r.variance_warning ? 1 : 0;
    return t;
}

namespace {

void check_samples(const CheckpointSamples& s) {
    if (static_cast<Eigen::Index>(s.checkpoints.size()) != s.values.cols())
        throw std::invalid_argument("one column per checkpoint expected");
}

}  // namespace

Curve variance_scaling(const CheckpointSamples& S, double H_norm_ref) {
    check_samples(S);
    Curve c;
    c.checkpoints = S.checkpoints;
    const Eigen::Index m = S.values.rows();
    if (m < 2 || S.checkpoints.empty()) return c;
    const double dm = static_cast<double>(m);
    for (Eigen::Index j = 0; j < S.values.cols(); ++j) {
        const double n = static_cast<double>(S.checkpoints[j]);
        const Eigen::ArrayXd x = S.values.col(j).array();
        const Eigen::ArrayXd d = x - x.mean();
        const double var = d.square().sum() / (dm - 1.0);
        const double mu4 = d.square().square().mean();
        const double se = std::sqrt(std::max(0.0, mu4 - var * var) / dm);
        c.values.push_back(var / n);
        c.std_errors.push_back(se / n);
    }
    if (m < 1000) return c;
    const double target = H_norm_ref * H_norm_ref;
    const double gap = std::abs(c.values.back() - target);
    c.verdict = gap <= 0.05 * target + 3.0 * c.std_errors.back() ? CheckVerdict::Pass : CheckVerdict::Fail;
    return c;
}

Curve remainder_decay(const CheckpointSamples& R, const CheckpointSamples& S) {
    check_samples(R);
    check_samples(S);
    if (R.checkpoints != S.checkpoints || R.values.rows() != S.values.rows())
        throw std::invalid_argument("remainder and sum samples must share paths and checkpoints");
    Curve c;
    c.checkpoints = R.checkpoints;
    const Eigen::Index m = R.values.rows();
    if (m < 2 || R.checkpoints.empty()) return c;
    const double dm = static_cast<double>(m);
    bool negligible = true;
    for (Eigen::Index j = 0; j < R.values.cols(); ++j) {
        const double n = static_cast<double>(R.checkpoints[j]);
        const Eigen::ArrayXd sq = R.values.col(j).array().square();
        const double mean = sq.mean();
        const double se = std::sqrt((sq - mean).square().sum() / (dm - 1.0) / dm);
        c.values.push_back(mean / n);
        c.std_errors.push_back(se / n);
        const Eigen::ArrayXd s = S.values.col(j).array();
        const double var_s = (s - s.mean()).square().sum() / (dm - 1.0) / n;
        if (mean / n >= 1e-3 * var_s) negligible = false;
    }
    auto index_of = [&](std::int64_t n, std::size_t fallback) {
        const auto it = std::find(c.checkpoints.begin(), c.checkpoints.end(), n);
        return it == c.checkpoints.end() ? fallback : static_cast<std::size_t>(it - c.checkpoints.begin());
    };
    const std::size_t a = index_of(256, 0);
    const std::size_t b = index_of(65536, c.values.size() - 1);
    const bool decays = a < b && c.values[a] >= 2.0 * c.values[b];
    c.verdict = decays || negligible ? CheckVerdict::Pass : CheckVerdict::Fail;
    return c;
}

double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

double quantile(std::vector<double> x, double p) {
    if (x.empty()) throw std::invalid_argument("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile level must lie in [0, 1]");
    std::sort(x.begin(), x.end());
    const double pos = p * static_cast<double>(x.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

double bootstrap_quantile_se(const std::vector<double>& x, double p, int resamples,
                             std::uint64_t seed) {
    if (x.size() < 2 || resamples < 2) return 0.0;
    RngStream rng(seed, 0x626f6f74);
    std::vector<double> q(static_cast<std::size_t>(resamples));
    std::vector<double> sample(x.size());
    for (auto& v : q) {
        for (auto& s : sample) s = x[rng.below(x.size())];
        v = quantile(sample, p);
    }
    double mean = 0.0;
    for (double v : q) mean += v;
    mean /= static_cast<double>(q.size());
    double ss = 0.0;
    for (double v : q) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(q.size() - 1));
}

}  // namespace mwlil
