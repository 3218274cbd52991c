#pragma once

// Test-only oracles, independent of the library implementations they check.

#include <cmath>
#include <vector>

namespace oracles {

// Gamma via Stirling's series in extended precision with argument shifting.
// Truncation below 1e-20 for shifted arguments >= 30; used as the reference
// for the library's Lanczos implementation.
inline long double gamma_oracle(long double z) {
    int shift = 0;
    long double zs = z;
    while (zs < 30.0L) {
        ++shift;
        zs += 1.0L;
    }
    const long double x = zs;
    const long double inv = 1.0L / x;
    const long double inv2 = inv * inv;
    // Bernoulli-number series B2..B16.
    long double series = 0.0L;
    series += inv / 12.0L;
    series -= inv * inv2 / 360.0L;
    series += inv * inv2 * inv2 / 1260.0L;
    series -= inv * inv2 * inv2 * inv2 / 1680.0L;
    series += inv * inv2 * inv2 * inv2 * inv2 / 1188.0L;
    series -= 691.0L * inv * inv2 * inv2 * inv2 * inv2 * inv2 / 360360.0L;
    series += inv * inv2 * inv2 * inv2 * inv2 * inv2 * inv2 / 156.0L;
    series -= 3617.0L * inv * inv2 * inv2 * inv2 * inv2 * inv2 * inv2 * inv2 / 122400.0L;
    const long double half_log_2pi = 0.918938533204672741780329736405617639862L;
    const long double lg = (x - 0.5L) * std::log(x) - x + half_log_2pi + series;
    long double g = std::exp(lg);
    for (int k = shift - 1; k >= 0; --k) g /= (z + static_cast<long double>(k));
    return g;
}

// Exact tail of the standard Cauchy law.
inline double cauchy_tail(double t) { return 2.0 / 3.14159265358979323846 * std::atan(1.0 / t); }

// Relative size of the second term of the asymptotic tail series for the
// symmetric alpha-stable law with characteristic function exp(-|xi|^alpha):
// the k-th term of P(X > t) is proportional to Gamma(k a) sin(k pi a / 2) / k!.
inline double stable_tail_second_term_ratio(double alpha, double t) {
    const long double g2 = gamma_oracle(2.0L * alpha);
    const long double g1 = gamma_oracle(alpha);
    const double s2 = std::sin(3.14159265358979323846 * alpha);
    const double s1 = std::sin(3.14159265358979323846 * alpha / 2.0);
    return std::abs(static_cast<double>(g2 / g1) * s2 / (2.0 * s1)) * std::pow(t, -alpha);
}

}  // namespace oracles
