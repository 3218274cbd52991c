#include "recti/stable_math.hpp"

#include "recti/gamma.hpp"

#include <cmath>

namespace recti {

namespace {
constexpr double kPi = 3.14159265358979323846;
}  // namespace

double a_alpha(StabilityIndex alpha) {
    const double a = alpha.value();
    return a * std::pow(2.0, a - 1.0) / std::sqrt(kPi) * gamma_fn((1.0 + a) / 2.0) /
           gamma_fn(1.0 - a / 2.0);
}

double a_tilde_alpha(StabilityIndex alpha) {
    const double a = alpha.value();
    return std::pow(2.0, a) / std::sqrt(kPi) * gamma_fn((1.0 + a) / 2.0) *
           gamma_fn(1.0 + a / 2.0);
}

GeneratorConstants GeneratorConstants::compute(StabilityIndex alpha) {
    return GeneratorConstants{recti::a_alpha(alpha), recti::a_tilde_alpha(alpha)};
}

double sample_standard_stable(StabilityIndex alpha, RandomStream& rng) {
    const double a = alpha.value();
    const double u = kPi * (rng.uniform_open() - 0.5);  // uniform on (-pi/2, pi/2)
    if (std::abs(a - 1.0) < 1e-12) return std::tan(u);
    const double w = rng.exponential();
    const double s = std::sin(a * u) / std::pow(std::cos(u), 1.0 / a);
    const double t = std::pow(std::cos((1.0 - a) * u) / w, (1.0 - a) / a);
    return s * t;
}

double sample_increment(StabilityIndex alpha, double dt, RandomStream& rng) {
    require(dt > 0.0, "sample_increment: dt must be positive");
    return std::pow(dt, 1.0 / alpha.value()) * sample_standard_stable(alpha, rng);
}

}  // namespace recti
