#include "recti/levy_exact.hpp"

#include "recti/stable_math.hpp"

#include <doctest.h>

#include <cmath>

using namespace recti;

TEST_CASE("ring roots: central symmetry and a hand example") {
    Vec z0{0.0, 0.0};
    Vec y{0.0, 0.0};
    Vec a{0.0, 3.0};
    const RingRoots rr = ring_roots(y, a, z0, 2.0);
    CHECK(rr.v_plus == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(rr.v_minus == doctest::Approx(-2.0 / 3.0).epsilon(1e-14));

    // d = 2, y - z0 = (0.3, 0), a = (0,1), R = 1: v+ = sqrt(1 - 0.09).
    Vec y2{0.3, 0.0};
    Vec a2{0.0, 1.0};
    const RingRoots rr2 = ring_roots(y2, a2, z0, 1.0);
    CHECK(rr2.v_plus == doctest::Approx(std::sqrt(0.91)).epsilon(1e-14));
    CHECK(rr2.v_minus == doctest::Approx(-std::sqrt(0.91)).epsilon(1e-14));
}

TEST_CASE("ring roots: plug-back residual below 1e-12 relative") {
    RandomStream rng(1312);
    Vec z0{0.4, -0.2};
    double worst = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double R = 0.5 + 4.0 * rng.uniform01();
        const double rho = R * 0.999 * std::sqrt(rng.uniform01());
        const double ang = 6.283185307179586 * rng.uniform01();
        Vec y{z0[0] + rho * std::cos(ang), z0[1] + rho * std::sin(ang)};
        Vec a{2.0 * rng.uniform01() - 1.0, 2.0 * rng.uniform01() - 1.0};
        if (norm(a) < 1e-3) continue;
        const RingRoots rr = ring_roots(y, a, z0, R);
        for (double v : {rr.v_minus, rr.v_plus}) {
            Vec img{y[0] + a[0] * v - z0[0], y[1] + a[1] * v - z0[1]};
            worst = std::max(worst, std::abs(norm(img) - R) / R);
        }
        CHECK(rr.v_minus < 0.0);
        CHECK(rr.v_plus > 0.0);
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("ring roots reject degenerate input") {
    Vec z0{0.0, 0.0}, y{0.1, 0.0}, zero{0.0, 0.0};
    CHECK_THROWS(ring_roots(y, zero, z0, 1.0));
    Vec outside{3.0, 0.0}, a{1.0, 0.0};
    CHECK_THROWS(ring_roots(outside, a, z0, 1.0));
}

TEST_CASE("ring measure at the center under the identity field") {
    const CoefficientField id = builtin_field("identity", 2);
    Vec z0{0.0, 0.0}, y{0.0, 0.0};
    const double R = 2.0, eta = 0.3, alpha = 1.2;
    const MuValue mu = mu_ring_measure(y, id, z0, 1.0, R, eta, alpha);
    const double a_const = a_alpha(StabilityIndex(alpha));
    const double expected =
        2.0 * a_const * (2.0 / alpha) * (std::pow(R, -alpha) - std::pow(R + eta, -alpha));
    CHECK(mu.value == doctest::Approx(expected).epsilon(1e-13));
    CHECK(mu.within_regime);
    const MuValue out = mu_ring_measure(y, id, z0, 1.9, R, eta, alpha);  // r too large
    CHECK(!out.within_regime);
    CHECK(out.value == doctest::Approx(mu.value));
}

TEST_CASE("ring preimage interval lengths obey the two-sided bounds") {
    RandomStream rng(515);
    const CoefficientField field = builtin_field("rotscale", 2);
    Vec z0{0.0, 0.0};
    for (int i = 0; i < 10000; ++i) {
        const double r = 1.0;
        const double R = r * (1.3 + 3.0 * rng.uniform01());
        const double eta = r * (0.02 + 0.9 * rng.uniform01());
        const double rho = 0.99 * r * std::sqrt(rng.uniform01());
        const double ang = 6.283185307179586 * rng.uniform01();
        Vec y{rho * std::cos(ang), rho * std::sin(ang)};
        if (!(eta < r && r < 0.8 * R)) continue;
        const RingPreimage pre = ring_preimage(y, field, z0, R, eta);
        for (const auto& ax : pre.axes) {
            const double lo = eta / ax.a_norm, hi = 4.0 * eta / ax.a_norm;
            CHECK(ax.pos_hi - ax.pos_lo >= lo * (1 - 1e-12));
            CHECK(ax.pos_hi - ax.pos_lo <= hi * (1 + 1e-12));
            CHECK(ax.neg_hi - ax.neg_lo >= lo * (1 - 1e-12));
            CHECK(ax.neg_hi - ax.neg_lo <= hi * (1 + 1e-12));
        }
    }
}

TEST_CASE("ring measure monotonicity in eta and R") {
    const CoefficientField field = builtin_field("diag2", 2);
    Vec z0{0.0, 0.0}, y{0.3, -0.1};
    const double alpha = 0.9;
    double prev = 0.0;
    for (double eta : {0.1, 0.2, 0.4}) {
        const double v = mu_ring_measure(y, field, z0, 1.0, 2.0, eta, alpha).value;
        CHECK(v > prev);
        prev = v;
    }
    double prev_r = 1e9;
    for (double R : {1.5, 2.0, 3.0, 5.0}) {
        const double v = mu_ring_measure(y, field, z0, 1.0, R, 0.2, alpha).value;
        CHECK(v < prev_r);
        prev_r = v;
    }
    // Width -> 0 decays linearly.
    const double v1 = mu_ring_measure(y, field, z0, 1.0, 2.0, 1e-4, alpha).value;
    const double v2 = mu_ring_measure(y, field, z0, 1.0, 2.0, 2e-4, alpha).value;
    CHECK(v2 / v1 == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("exterior measure at the center and the envelope inequality") {
    const CoefficientField id = builtin_field("identity", 2);
    Vec z0{0.0, 0.0}, y{0.0, 0.0};
    const double alpha = 1.1, R = 2.0;
    const ExteriorMeasure em = mu_exterior_lower(y, id, z0, y, R, alpha);
    const double a_const = a_alpha(StabilityIndex(alpha));
    CHECK(em.exact ==
          doctest::Approx(2.0 * 2.0 * a_const * std::pow(R, -alpha) / alpha).epsilon(1e-13));
    CHECK(em.exact >= em.envelope);
    CHECK(em.c_constant > 0.0);
    CHECK(em.within_regime);

    // Envelope power law: halving R - |x| multiplies the envelope by 2^alpha.
    Vec x1{1.0, 0.0}, x2{1.5, 0.0};
    const ExteriorMeasure e1 = mu_exterior_lower(x1, id, z0, x1, R, alpha);
    const ExteriorMeasure e2 = mu_exterior_lower(x2, id, z0, x2, R, alpha);
    CHECK(e2.envelope / e1.envelope == doctest::Approx(std::pow(2.0, alpha)).epsilon(1e-12));
}

TEST_CASE("exterior exact dominates the envelope on random admissible configs") {
    RandomStream rng(717);
    for (const char* name : {"identity", "rotscale"}) {
        const CoefficientField field = builtin_field(name, 2);
        Vec z0{0.0, 0.0};
        for (int i = 0; i < 10000; ++i) {
            const double R = 0.5 + 3.0 * rng.uniform01();
            const double rho = 0.95 * R * rng.uniform01();
            const double ang = 6.283185307179586 * rng.uniform01();
            Vec x{rho * std::cos(ang), rho * std::sin(ang)};
            const double rx = (R - rho) / 3.0;
            const double yang = 6.283185307179586 * rng.uniform01();
            Vec y{x[0] + 0.99 * rx * std::cos(yang), x[1] + 0.99 * rx * std::sin(yang)};
            const ExteriorMeasure em = mu_exterior_lower(y, field, z0, x, R, 1.3);
            CHECK(em.within_regime);
            CHECK(em.exact >= em.envelope * (1.0 - 1e-12));
        }
    }
}

TEST_CASE("radial set measures are additive across the shell split") {
    const CoefficientField field = builtin_field("rotscale", 2);
    Vec z0{0.1, 0.2}, y{0.5, -0.3};
    const double alpha = 1.4, R = 2.0, eta = 0.5;
    const double ring = nu_radial_set(y, field, z0, RadialSet{RadialSetKind::ring, R, eta}, alpha);
    const double ext_outer =
        nu_radial_set(y, field, z0, RadialSet{RadialSetKind::exterior, R + eta, 0.0}, alpha);
    const double ext_inner =
        nu_radial_set(y, field, z0, RadialSet{RadialSetKind::exterior, R, 0.0}, alpha);
    CHECK(ring + ext_outer == doctest::Approx(ext_inner).epsilon(1e-12));
}

TEST_CASE("identity field reduces to sums of one-dimensional tail integrals") {
    const CoefficientField id = builtin_field("identity", 2);
    Vec z0{0.0, 0.0}, y{0.2, 0.1};
    const double alpha = 0.7, R = 1.5;
    const double a_const = a_alpha(StabilityIndex(alpha));
    // Axis i contributes the mass of {|y_i + v| >= sqrt(R^2 - |y_perp|^2)}.
    double expected = 0.0;
    for (int i = 0; i < 2; ++i) {
        const double perp = (i == 0) ? y[1] : y[0];
        const double own = (i == 0) ? y[0] : y[1];
        const double chord = std::sqrt(R * R - perp * perp);
        expected += a_const / alpha *
                    (std::pow(chord - own, -alpha) + std::pow(chord + own, -alpha));
    }
    const double got =
        nu_radial_set(y, id, z0, RadialSet{RadialSetKind::exterior, R, 0.0}, alpha);
    CHECK(got == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("Monte Carlo oracle confirms the exact ring measure") {
    RandomStream rng(40404);
    for (const char* name : {"identity", "rotscale"}) {
        const CoefficientField field = builtin_field(name, 2);
        Vec z0{0.0, 0.0}, y{0.4, -0.2};
        const double alpha = 1.0, R = 2.0, eta = 0.25;
        const MuValue exact = mu_ring_measure(y, field, z0, 1.0, R, eta, alpha);
        const McEstimate mc = mu_ring_measure_mc(y, field, z0, 1.0, R, eta, alpha, 1000000, rng);
        INFO(name, ": exact ", exact.value, " mc ", mc.value, " se ", mc.se);
        CHECK(std::abs(mc.value - exact.value) <= 3.0 * mc.se);
    }
}

TEST_CASE("directional minimum is positive for the builtin fields") {
    for (const char* name : {"identity", "diag2", "rotscale"}) {
        const CoefficientField field = builtin_field(name, 2);
        const double m = min_directional_sum(field, 1.2, 2.0, 32, 64);
        INFO(name);
        CHECK(m > 0.0);
        CHECK(std::isfinite(m));
    }
}
