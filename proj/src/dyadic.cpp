#include "mwlil/dyadic.hpp"

#include <stdexcept>

#include "gauss_legendre.hpp"

namespace mwlil {

DyadicFunction::DyadicFunction(int level, Eigen::ArrayXd values)
    : level_(level), values_(std::move(values)) {
    if (level < 0 || level > kMaxLevel) throw std::invalid_argument("dyadic level out of range");
    if (values_.size() != (Eigen::Index{1} << level))
        throw std::invalid_argument("dyadic values must have 2^level entries");
}

DyadicFunction DyadicFunction::constant(int level, double value) {
    return DyadicFunction(level, Eigen::ArrayXd::Constant(Eigen::Index{1} << level, value));
}

DyadicFunction DyadicFunction::apply_Q() const {
    if (level_ == 0) return *this;
    const Eigen::Index half = values_.size() / 2;
    Eigen::ArrayXd q = 0.5 * (values_.head(half) + values_.tail(half));
    return DyadicFunction(level_ - 1, std::move(q));
}

DyadicFunction DyadicFunction::refined(int level) const {
    if (level < level_) throw std::invalid_argument("refined() needs a finer level");
    if (level == level_) return *this;
    const int shift = level - level_;
    Eigen::ArrayXd fine(Eigen::Index{1} << level);
    for (Eigen::Index i = 0; i < fine.size(); ++i) fine[i] = values_[i >> shift];
    return DyadicFunction(level, std::move(fine));
}

DyadicFunction DyadicFunction::coarsened(int level) const {
    if (level > level_) throw std::invalid_argument("coarsened() needs a coarser level");
    if (level == level_) return *this;
    const Eigen::Index block = Eigen::Index{1} << (level_ - level);
    Eigen::ArrayXd coarse(Eigen::Index{1} << level);
    for (Eigen::Index j = 0; j < coarse.size(); ++j)
        coarse[j] = values_.segment(j * block, block).mean();
    return DyadicFunction(level, std::move(coarse));
}

DyadicFunction axpby(double a, const DyadicFunction& f, double b, const DyadicFunction& g) {
    const int level = std::max(f.level(), g.level());
    const DyadicFunction ff = f.refined(level);
    const DyadicFunction gg = g.refined(level);
    return DyadicFunction(level, a * ff.values() + b * gg.values());
}

std::shared_ptr<const DyadicFunction> dyadic_projection(const Functional& g, int level) {
    if (g.chain_kind() != ChainKind::Bernoulli)
        throw std::invalid_argument("dyadic projection applies to Bernoulli functionals");
    if (level < 0 || level > DyadicFunction::kMaxLevel)
        throw std::invalid_argument("dyadic level out of range");

    auto& cache = g.projection_cache();
    {
        std::lock_guard lock(cache.mutex);
        if (auto it = cache.by_level.find(level); it != cache.by_level.end()) return it->second;
    }

    std::shared_ptr<const DyadicFunction> result;
    if (const auto& own = g.traits().dyadic) {
        result = std::make_shared<const DyadicFunction>(
            level >= own->level() ? own->refined(level) : own->coarsened(level));
    } else {
        const Eigen::Index n = Eigen::Index{1} << level;
        const double width = 1.0 / static_cast<double>(n);
        Eigen::ArrayXd v(n);
        const auto& cell = g.traits().raw_cell_integral;
        auto raw = [&g](double x) { return g.raw(std::span<const double>(&x, 1)); };
        for (Eigen::Index i = 0; i < n; ++i) {
            const double a = static_cast<double>(i) * width;
            const double b = static_cast<double>(i + 1) * width;
            const double integral = cell ? cell(a, b) : detail::gauss_legendre5(raw, a, b);
            v[i] = integral / width - g.centering();
        }
        v -= v.mean();
        result = std::make_shared<const DyadicFunction>(level, std::move(v));
    }

    std::lock_guard lock(cache.mutex);
    cache.by_level.emplace(level, result);
    return result;
}

}  // namespace mwlil
