#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mwlil/chain.hpp"
#include "mwlil/functional.hpp"
#include "mwlil/transfer_op.hpp"

namespace mwlil {

/// MW102: sum n^-3/2 ||V_n g||.  Cor211: sum k^(delta-1/2) ||Q^k g||.
/// Cor212: sum k^delta ||Q^k g||^2.  Bern301: the log^delta double integral
/// on [0,1]^2.  Leb302Series: sum k^(1+delta) c_k^2 / 12 for linear g.
enum class ConditionId { MW102, Cor211, Cor212, Bern301, Leb302Series };
std::string_view to_string(ConditionId id);
ConditionId parse_condition_id(std::string_view text);

enum class Verdict { ConvergentEvidence, DivergentEvidence, Inconclusive };
std::string_view to_string(Verdict v);

struct ConditionBudget {
    std::int64_t max_terms = std::int64_t{1} << 18;
    std::int64_t max_samples = std::int64_t{1} << 20;
};

/// Bern301 estimate with the diagonal band |x - y| < band removed.
struct BandEstimate {
    double band = 0.0;
    double value = 0.0;
    double std_error = 0.0;
};

struct ConditionReport {
    ConditionId id = ConditionId::MW102;
    double delta = 0.0;
    double partial_sum = 0.0;
    double std_error = 0.0;
    std::int64_t terms_computed = 0;
    std::optional<double> tail_estimate;
    std::optional<double> decay_exponent;
    Verdict verdict = Verdict::Inconclusive;
    std::vector<double> terms;         // series terms, k or n = 1..terms_computed
    std::vector<double> partial_sums;  // running sums of `terms`
    std::vector<BandEstimate> bands;   // Bern301 only, primary band first
    std::string note;
};

/// Verdict for a nonnegative series from its computed terms.
///
/// Zero terms over the last half of the range give ConvergentEvidence with a
/// zero tail.  Otherwise the decay exponent p of t_k ~ k^-p is fitted over
/// that half: p > 1 together with a relative change below 1e-3 over the last
/// doubling gives ConvergentEvidence, p <= 1 gives DivergentEvidence, and
/// anything else is Inconclusive.
struct SeriesVerdict {
    Verdict verdict = Verdict::Inconclusive;
    std::optional<double> tail_estimate;
    std::optional<double> decay_exponent;
};
SeriesVerdict series_verdict(const std::vector<double>& terms);

ConditionReport check_condition(const ChainSpec& spec, const Functional& g, ConditionId id,
                                double delta, const ConditionBudget& budget = {},
                                const TransferOptions& opts = {});

}  // namespace mwlil
