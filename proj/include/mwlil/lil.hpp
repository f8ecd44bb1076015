#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "mwlil/path.hpp"
#include "mwlil/verdict.hpp"

namespace mwlil {

/// 1 / sqrt(2 n log log n) for n = 0..N (entries below 3 are 0).  Tables are
/// cached and shared.
std::shared_ptr<const std::vector<double>> lil_inverse_normalizers(std::int64_t N);

/// Running suprema of S_n / sqrt(2 n log log n) over n in [n0, N].
struct LilStatistic {
    std::int64_t n0 = 3;
    std::int64_t N = 0;
    double running_sup = 0.0;
    double running_sup_abs = 0.0;
    std::vector<std::int64_t> checkpoints;
    std::vector<double> sup_at;      // running_sup over [n0, checkpoint]
    std::vector<double> sup_abs_at;  // running_sup_abs over [n0, checkpoint]
    std::vector<double> ratio_at;    // S_c / sqrt(2 c log log c)
};

/// Online version of lil_statistic: push S_1, S_2, ... in order.
class LilTracker {
public:
    LilTracker(std::int64_t n0, std::vector<std::int64_t> checkpoints, std::int64_t capacity);

    void push(double S) {
        ++n_;
        if (n_ >= n0_) {
            const double r = S * (*inv_)[static_cast<std::size_t>(n_)];
            if (r > stat_.running_sup) stat_.running_sup = r;
            if (std::abs(r) > stat_.running_sup_abs) stat_.running_sup_abs = std::abs(r);
        }
        if (next_ < stat_.checkpoints.size() && n_ == stat_.checkpoints[next_]) record(S);
    }

    std::int64_t count() const { return n_; }
    LilStatistic result() const;

private:
    void record(double S);

    std::int64_t n0_;
    std::int64_t n_ = 0;
    std::size_t next_ = 0;
    std::shared_ptr<const std::vector<double>> inv_;
    LilStatistic stat_;
};

/// Checkpoints must lie in [n0, N]; others are rejected.
LilStatistic lil_statistic(std::span<const double> partial_sums, std::int64_t n0,
                           std::span<const std::int64_t> checkpoints = {});
LilStatistic lil_statistic(const Path& path, std::int64_t n0,
                           std::span<const std::int64_t> checkpoints = {});

/// 2^8, 2^10, ..., up to N.
std::vector<std::int64_t> default_checkpoints(std::int64_t N);

/// Running sup of |S_n| / sqrt(2 n log log n) for unit-variance increments.
struct StoutReport {
    double second_moment = 0.0;   // mean of Y^2
    bool variance_warning = false;  // off by more than 5% from 1
    std::vector<std::int64_t> horizons;
    std::vector<double> running_sup_abs;  // sup over [n0, horizon]
};

/// Throws std::invalid_argument for increments with zero second moment.
StoutReport stout_check(std::span<const double> increments, std::span<const std::int64_t> horizons,
                        std::int64_t n0 = 3);

struct StoutTrend {
    std::vector<std::int64_t> horizons;
    std::vector<double> medians;
    bool nondecreasing = true;
    std::int64_t variance_warnings = 0;
};

StoutTrend stout_trend(std::span<const StoutReport> reports);

/// A statistic observed at checkpoints on many paths: rows are paths.
struct CheckpointSamples {
    std::vector<std::int64_t> checkpoints;
    Eigen::MatrixXd values;
};

struct Curve {
    std::vector<std::int64_t> checkpoints;
    std::vector<double> values;
    std::vector<double> std_errors;
    CheckVerdict verdict = CheckVerdict::Inconclusive;
};

/// Var(S_n)/n with unbiased sample variances.  Pass when the last checkpoint
/// agrees with H_norm_ref^2 within 5% + 3 standard errors; Inconclusive with
/// fewer than 1000 paths.
Curve variance_scaling(const CheckpointSamples& S, double H_norm_ref);

/// E[R_n^2]/n.  Pass when the value at 2^8 is at least twice the value at
/// 2^16 (first and last checkpoint otherwise), or when the curve stays below
/// 1e-3 Var(S_n)/n.
Curve remainder_decay(const CheckpointSamples& R, const CheckpointSamples& S);

/// Median of x.
double median(std::vector<double> x);
/// Quantile by linear interpolation between order statistics.
double quantile(std::vector<double> x, double p);
/// Bootstrap standard error of quantile(x, p) from a fixed resampling stream.
double bootstrap_quantile_se(const std::vector<double>& x, double p, int resamples = 200,
                             std::uint64_t seed = 0);

}  // namespace mwlil
