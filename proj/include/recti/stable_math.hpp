#pragma once

#include "recti/common.hpp"
#include "recti/rng.hpp"

namespace recti {

// Stability index alpha, valid strictly inside (0,2).
class StabilityIndex {
public:
    explicit StabilityIndex(double alpha) : alpha_(alpha) {
        require(alpha > 0.0 && alpha < 2.0, "StabilityIndex: alpha must lie in (0,2)");
    }
    double value() const { return alpha_; }

private:
    double alpha_;
};

// alpha 2^{alpha-1} pi^{-1/2} Gamma((1+alpha)/2) / Gamma(1-alpha/2).
// This is the constant in front of the one-dimensional jump kernel
// |w|^{-1-alpha}; with it the driving 1d process has characteristic
// function exp(-t |xi|^alpha).
double a_alpha(StabilityIndex alpha);

// 2^alpha pi^{-1/2} Gamma((1+alpha)/2) Gamma(1+alpha/2): the constant value
// of -L_{e_d} applied to (r^2-|y|^2)^{alpha/2} inside the ball.
double a_tilde_alpha(StabilityIndex alpha);

struct GeneratorConstants {
    double a_alpha;
    double a_tilde_alpha;
    static GeneratorConstants compute(StabilityIndex alpha);
};

// One draw of the standard symmetric alpha-stable law (Chambers-Mallows-Stuck).
// "Standard" means Levy density a_alpha(alpha) |w|^{-1-alpha}, equivalently
// characteristic function exp(-|xi|^alpha); no extra scale factor is needed.
double sample_standard_stable(StabilityIndex alpha, RandomStream& rng);

// Increment of span dt > 0: dt^{1/alpha} times a standard draw.
double sample_increment(StabilityIndex alpha, double dt, RandomStream& rng);

}  // namespace recti
