#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace recti {

// Gamma function for real arguments via the classic Lanczos approximation
// (g = 7, 9 terms). Relative accuracy is ~1e-14 on the argument range this
// project uses (everything derived from alpha in (0,2)). Validated in the
// test suite against a slow Spouge-series oracle in extended precision.
inline double gamma_fn(double x) {
    if (std::isnan(x)) return x;
    if (x == std::floor(x) && x <= 0.0)
        throw std::invalid_argument("gamma_fn: pole at non-positive integer");

    static const double g = 7.0;
    static const double coef[9] = {
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    };

    if (x < 0.5) {
        // Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x).
        const double pi = 3.14159265358979323846;
        return pi / (std::sin(pi * x) * gamma_fn(1.0 - x));
    }

    const double z = x - 1.0;
    double a = coef[0];
    for (int i = 1; i < 9; ++i) a += coef[i] / (z + static_cast<double>(i));
    const double t = z + g + 0.5;
    const double sqrt_two_pi = 2.5066282746310005024;
    return sqrt_two_pi * std::pow(t, z + 0.5) * std::exp(-t) * a;
}

}  // namespace recti
