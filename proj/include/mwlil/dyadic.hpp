#pragma once

#include <Eigen/Dense>
#include <memory>

#include "mwlil/functional.hpp"

namespace mwlil {

/// A step function on [0, 1] that is constant on the 2^level dyadic cells
/// [i 2^-level, (i + 1) 2^-level).
///
/// The Bernoulli transition operator maps level-L step functions to level
/// L-1 step functions exactly, so every operator identity evaluated on this
/// representation holds to rounding.
class DyadicFunction {
public:
    static constexpr int kMaxLevel = 28;

    DyadicFunction(int level, Eigen::ArrayXd values);

    static DyadicFunction constant(int level, double value);

    int level() const { return level_; }
    Eigen::Index cells() const { return values_.size(); }
    const Eigen::ArrayXd& values() const { return values_; }

    double operator()(double x) const {
        auto i = static_cast<Eigen::Index>(x * static_cast<double>(values_.size()));
        if (i < 0) i = 0;
        if (i >= values_.size()) i = values_.size() - 1;
        return values_[i];
    }

    double mean() const { return values_.mean(); }
    double squared_norm() const { return values_.square().mean(); }

    /// Qf(x) = (f(x/2) + f((1+x)/2)) / 2, one level coarser. Level 0 is fixed.
    DyadicFunction apply_Q() const;

    /// Same function on a finer grid.
    DyadicFunction refined(int level) const;

    /// Cell averages on a coarser grid.
    DyadicFunction coarsened(int level) const;

private:
    int level_;
    Eigen::ArrayXd values_;
};

/// a * f + b * g on the finer of the two grids.
DyadicFunction axpby(double a, const DyadicFunction& f, double b, const DyadicFunction& g);

/// Orthogonal projection of a Bernoulli functional onto level-`level` step
/// functions (cell averages), recentred so the cell values have mean zero.
/// Results are cached on the functional.
std::shared_ptr<const DyadicFunction> dyadic_projection(const Functional& g, int level);

}  // namespace mwlil
