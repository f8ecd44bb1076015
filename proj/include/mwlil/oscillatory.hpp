#pragma once

namespace mwlil {

enum class Trig { Sin, Cos };

struct TailIntegral {
    double value = 0.0;
    double error_bound = 0.0;
};

/// Integral of t^power * trig(t) over [start, inf) by repeated integration by
/// parts; accurate when start is large compared to |power| + depth.
/// Requires power < 0.
TailIntegral power_trig_tail(double power, double start, Trig trig, int depth = 8);

/// Integral of t^power * trig(t) over [a, b] (b may be +inf, then power < -1).
/// Gauss-Legendre panels no longer than a quarter period up to `asymptotic_from`,
/// asymptotic tail beyond it.
double power_trig_integral(double power, double a, double b, Trig trig,
                           double asymptotic_from = 1000.0);

}  // namespace mwlil
