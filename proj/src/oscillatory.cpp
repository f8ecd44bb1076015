#include "mwlil/oscillatory.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "gauss_legendre.hpp"

namespace mwlil {

TailIntegral power_trig_tail(double power, double start, Trig trig, int depth) {
    if (power >= 0.0) throw std::invalid_argument("power_trig_tail needs a negative power");
    if (!(start > 0.0)) throw std::invalid_argument("power_trig_tail needs a positive start");
    if (std::isinf(start)) return {};
    const double s = std::sin(start);
    const double c = std::cos(start);
    // int t^b sin = T^b cos T + b int t^(b-1) cos
    // int t^b cos = -T^b sin T - b int t^(b-1) sin
    double value = 0.0;
    double coef = 1.0;
    double beta = power;
    Trig current = trig;
    for (int d = 0; d < depth; ++d) {
        const double boundary = std::pow(start, beta);
        if (current == Trig::Sin) {
            value += coef * boundary * c;
            current = Trig::Cos;
        } else {
            value -= coef * boundary * s;
            coef = -coef;
            current = Trig::Sin;
        }
        coef *= beta;
        beta -= 1.0;
    }
    TailIntegral out;
    out.value = value;
    out.error_bound = std::abs(coef) * std::pow(start, beta + 1.0) / (-beta - 1.0);
    return out;
}

double power_trig_integral(double power, double a, double b, Trig trig, double asymptotic_from) {
    if (!(a > 0.0)) throw std::invalid_argument("power_trig_integral needs a > 0");
    if (b < a) return -power_trig_integral(power, b, a, trig, asymptotic_from);
    if (std::isinf(b) && power >= -1.0)
        throw std::invalid_argument("power_trig_integral to infinity needs power < -1");
    auto tail = [&](double t) { return power_trig_tail(power, t, trig).value; };
    if (a >= asymptotic_from) return tail(a) - tail(b);

    const double stop = std::min(b, asymptotic_from);
    constexpr double kPanel = std::numbers::pi / 2.0;
    auto f = [power, trig](double t) {
        return std::pow(t, power) * (trig == Trig::Sin ? std::sin(t) : std::cos(t));
    };
    const auto panels = static_cast<long>(std::ceil((stop - a) / kPanel));
    double sum = 0.0;
    if (panels > 0) {
        const double width = (stop - a) / static_cast<double>(panels);
        for (long p = 0; p < panels; ++p) {
            const double lo = a + static_cast<double>(p) * width;
            const double hi = (p + 1 == panels) ? stop : lo + width;
            sum += detail::gauss_legendre10(f, lo, hi);
        }
    }
    if (b > asymptotic_from) sum += tail(asymptotic_from) - tail(b);
    return sum;
}

}  // namespace mwlil
