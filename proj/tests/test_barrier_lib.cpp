#include "recti/barrier_lib.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace recti;

namespace {

BarrierParams moderate_params(double r = 1.0, double eps = 0.25) {
    // Wide pieces so finite differences across the joints are well posed.
    BarrierParams p;
    p.r = r;
    p.eps = eps;
    p.eta_ring = eps;
    p.N = 4.0;
    const double q = p.q();
    p.K1 = (r * eps / 16.0) / q;
    p.K2 = r * eps / 16.0;
    p.b = 1.0;
    return p;
}

}  // namespace

TEST_CASE("closed-form values at the breakpoints") {
    const BarrierParams p = moderate_params();
    const PiecewiseTheta theta = build_theta(p);
    const double q = p.q();
    CHECK(theta.value_at(0) == doctest::Approx(1.0 / q).epsilon(1e-14));
    CHECK(theta.deriv_one_sided(0, -1) == doctest::Approx(1.0 / (q * q)).epsilon(1e-14));
    CHECK(theta.second_deriv_one_sided(0, -1) ==
          doctest::Approx(2.0 / (q * q * q)).epsilon(1e-14));
    CHECK(theta.value_at(1) ==
          doctest::Approx((1.0 + p.K1 + 2.0 * p.K1 * p.K1 / 3.0) / q).epsilon(1e-14));
    CHECK(theta.deriv_one_sided(1, -1) ==
          doctest::Approx((1.0 + p.K1) / (q * q)).epsilon(1e-14));
    // sup - 1/q identity from the construction.
    const double gap = (p.K1 + 2.0 * p.K1 * p.K1 / 3.0) / q +
                       p.K2 / (2.0 * q * q) * (1.0 + p.K1);
    CHECK(theta.sup_value() - theta.value_at(0) == doctest::Approx(gap).epsilon(1e-12));
    CHECK(theta.deriv_one_sided(2, -1) == 0.0);
    CHECK(theta.second_deriv_one_sided(2, -1) == 0.0);
}

TEST_CASE("one-sided finite differences confirm the C2 stitch") {
    const BarrierParams p = moderate_params();
    const PiecewiseTheta theta = build_theta(p);
    const double q = p.q();
    // Five-point one-sided stencils are exact on the cubic and quartic
    // pieces, so the only truncation left comes from the reciprocal piece.
    // Step 1e-3 q keeps the second-difference rounding noise (~27 eps
    // theta / h^2) three orders below the 1e-6 relative target.
    const double h = 1e-3 * q;
    const double joints[3] = {theta.T0(), theta.T1(), theta.T2()};
    auto val = [&](double v) { return theta.value(v); };
    auto d1_5pt = [&](double T, double step) {
        return (-25.0 / 12.0 * val(T) + 4.0 * val(T + step) - 3.0 * val(T + 2.0 * step) +
                4.0 / 3.0 * val(T + 3.0 * step) - 0.25 * val(T + 4.0 * step)) /
               step;
    };
    auto d2_5pt = [&](double T, double step) {
        return (35.0 / 12.0 * val(T) - 26.0 / 3.0 * val(T + step) +
                19.0 / 2.0 * val(T + 2.0 * step) - 14.0 / 3.0 * val(T + 3.0 * step) +
                11.0 / 12.0 * val(T + 4.0 * step)) /
               (step * step);
    };
    for (double T : joints) {
        CHECK(val(T - 1e-12) == doctest::Approx(val(T + 1e-12)).epsilon(1e-9));
        const double d_right = d1_5pt(T, h);
        const double d_left = d1_5pt(T, -h);
        CHECK(d_right ==
              doctest::Approx(d_left).epsilon(1e-6).scale(std::max(1.0, 1.0 / (q * q))));
        const double dd_right = d2_5pt(T, h);
        const double dd_left = d2_5pt(T, -h);
        const double scale = 2.0 / (q * q * q);
        CHECK(std::abs(dd_right - dd_left) <= 1e-6 * scale * std::max(1.0, q));
    }
}

TEST_CASE("class audit passes for the construction") {
    const BarrierParams p = moderate_params();
    const PiecewiseTheta theta = build_theta(p);
    const ThetaAuditReport rep = theta_class_audit(theta, p);
    CHECK(rep.piece_identity_ok);
    CHECK(rep.window_ok);
    CHECK(rep.c2_ok);
    CHECK(rep.increasing_ok);
    CHECK(rep.max_second_deriv_ok);
    CHECK(rep.value_bound_ok);
    CHECK(rep.deriv_bound_ok);
    CHECK(rep.observed_c1 > 0.0);
    CHECK(rep.observed_c2 >= rep.observed_c1);
    CHECK(rep.pass());
}

TEST_CASE("parameter selection satisfies both inequalities and is monotone in N") {
    for (double r : {0.7, 1.0, 2.5}) {
        for (double eps_frac : {0.08, 0.25}) {
            const double eps = r * eps_frac;
            const BarrierParams p4 = choose_theta_params(r, eps, 4.0);
            p4.validate();
            const double q = p4.q();
            CHECK(p4.K1 * q < r * eps / 8.0);
            CHECK(p4.K2 < r * eps / 8.0);
            CHECK(p4.K1 * q + p4.K2 <= eps / 4.0);
            const PiecewiseTheta theta = build_theta(p4);
            // Re-check the sup condition by direct evaluation (exponent 6
            // dominates 4 + alpha for every alpha in (0,2)).
            CHECK(theta.sup_value() - 1.0 / q <= std::pow(4.0, -6.0) + 1e-18);
            const BarrierParams p8 = choose_theta_params(r, eps, 8.0);
            CHECK(p8.K1 * p8.q() + p8.K2 <= 0.5 * (p4.K1 * q + p4.K2) + 1e-18);
        }
    }
}

TEST_CASE("selected parameters pass the class audit") {
    for (double N : {4.0, 6.0, 12.0}) {
        const BarrierParams p = choose_theta_params(1.0, 0.25, N);
        const PiecewiseTheta theta = build_theta(p);
        CHECK(theta_class_audit(theta, p).pass());
    }
}

TEST_CASE("lambda profile examples") {
    Vec c{0.0, 0.0};
    CHECK(lambda_eval(c, 1.0, 1.3) == doctest::Approx(1.0));
    Vec y{0.3, 0.4};  // |y| = 0.5
    CHECK(lambda_eval(y, 1.0, 1.0) == doctest::Approx(std::sqrt(0.75)).epsilon(1e-12));
    Vec edge{1.0, 0.0};
    CHECK(lambda_eval(edge, 1.0, 0.7) == 0.0);
    Vec out{1.2, 0.9};
    CHECK(lambda_eval(out, 1.0, 0.7) == 0.0);
}

TEST_CASE("h profile examples and the boundary rejection") {
    Vec c{0.0, 0.0};
    CHECK(h_eval(c, 1.0, 1.7) == doctest::Approx(1.0));
    Vec y{0.8, 0.0};
    CHECK(h_eval(y, 1.0, 1.0) == doctest::Approx(1.0 / 0.6).epsilon(1e-12));
    Vec out{1.5, 0.0};
    CHECK(h_eval(out, 1.0, 1.0) == 0.0);
    Vec edge{1.0, 0.0};
    CHECK_THROWS(h_eval(edge, 1.0, 1.0));
}

TEST_CASE("Theta branch identity, joint continuity, and the finite limit") {
    const double r = 1.2, eps = 0.3;
    const double T0 = (r - eps) * (r - eps);
    const double q = r * r - T0;
    for (int i = 0; i <= 32; ++i) {
        const double v = T0 * i / 32.0;
        CHECK(Theta_eval(v, r, eps) == doctest::Approx(1.0 / (r * r - v)).epsilon(1e-14));
    }
    CHECK(Theta_eval(T0 * (1 + 1e-13), r, eps) ==
          doctest::Approx(Theta_eval(T0 * (1 - 1e-13), r, eps)).epsilon(1e-9));
    CHECK(Theta_eval(0.0, r, eps) == doctest::Approx(1.0 / (r * r)));
    // v -> r^2 limit equals 3/q by the factored form.
    CHECK(Theta_eval(r * r - 1e-8, r, eps) == doctest::Approx(3.0 / q).epsilon(1e-6));
    CHECK_THROWS(Theta_eval(r * r, r, eps));
    CHECK_THROWS(Theta_eval(-0.1, r, eps));
}

TEST_CASE("ring indicator is the open ring") {
    const Ball ball({0.5, -0.5}, 1.0);
    const double eps = 0.25, eta = 0.125;
    Vec mid{0.5 + 1.0 + eps + eta / 2.0, -0.5};
    CHECK(g_indicator(mid, ball, eps, eta) == 1.0);
    Vec on_sphere{0.5 + 1.0, -0.5};
    CHECK(g_indicator(on_sphere, ball, eps, eta) == 0.0);
    Vec lower_edge{0.5 + 1.0 + eps, -0.5};
    CHECK(g_indicator(lower_edge, ball, eps, eta) == 0.0);
    Vec upper_edge{0.5 + 1.0 + eps + eta, -0.5};
    CHECK(g_indicator(upper_edge, ball, eps, eta) == 0.0);
}

TEST_CASE("combined barrier center value and support") {
    const double alpha = 1.2;
    const BarrierParams p = moderate_params();
    const PiecewiseTheta theta = build_theta(p);
    const Ball ball({0.0, 0.0}, p.r);
    Vec c{0.0, 0.0};
    const double expected = p.b * p.eta_ring * std::pow(p.r, 1.0 - alpha / 2.0) /
                            std::pow(p.eps, alpha / 2.0) * std::pow(p.r, alpha) /
                            (p.r * p.r);
    CHECK(f_b_theta_eval(c, p, theta, ball, alpha) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(F_b_Theta_eval(c, p, ball, alpha) == doctest::Approx(expected).epsilon(1e-12));
    Vec far{2.0, 1.0};
    CHECK(f_b_theta_eval(far, p, theta, ball, alpha) == 0.0);
    CHECK(F_b_Theta_eval(far, p, ball, alpha) == 0.0);
}

TEST_CASE("f_theta and F_Theta agree inside radius r - eps") {
    const BarrierParams p = moderate_params();
    const PiecewiseTheta theta = build_theta(p);
    RandomStream rng(808);
    for (int i = 0; i < 1000; ++i) {
        const double rho = (p.r - p.eps) * std::sqrt(rng.uniform01()) * 0.999;
        const double ang = 6.283185307179586 * rng.uniform01();
        Vec y{rho * std::cos(ang), rho * std::sin(ang)};
        const double a = f_theta_eval(y, theta, p.r, 1.4);
        const double b = F_Theta_eval(y, p.r, p.eps, 1.4);
        CHECK(a == doctest::Approx(b).epsilon(1e-12));
        CHECK(a == doctest::Approx(lambda_eval(y, p.r, 1.4) / (p.r * p.r - rho * rho))
                       .epsilon(1e-12));
    }
}

TEST_CASE("profiles vanish outside the ball (random exterior points)") {
    const BarrierParams p = moderate_params();
    const PiecewiseTheta theta = build_theta(p);
    RandomStream rng(909);
    for (int i = 0; i < 1000; ++i) {
        const double rho = p.r * (1.0 + 3.0 * rng.uniform01());
        const double ang = 6.283185307179586 * rng.uniform01();
        Vec y{rho * std::cos(ang), rho * std::sin(ang)};
        CHECK(lambda_eval(y, p.r, 0.9) == 0.0);
        CHECK(h_eval(y, p.r, 0.9) == 0.0);
        CHECK(f_theta_eval(y, theta, p.r, 0.9) == 0.0);
        CHECK(F_Theta_eval(y, p.r, p.eps, 0.9) == 0.0);
    }
}

TEST_CASE("comparison profile examples") {
    const Ball ball({0.0, 0.0}, 1.0);
    Vec center{0.0, 0.0};
    CHECK(phi_comparison(center, 2.0, ball, 1.0) ==
          doctest::Approx(1.0 / (std::sqrt(2.0) * 2.0)).epsilon(1e-12));
    CHECK_THROWS(phi_comparison(center, 1.0, ball, 1.0));
    CHECK_THROWS(phi_comparison(center, 0.5, ball, 1.0));
    // delta -> 0 sends phi to 0 pointwise.
    CHECK(phi_profile(1e-9, 1.0, 2.0, 1.0) < 1e-4);
}

TEST_CASE("phi integral is finite and converged for the usual alphas") {
    for (double a : {0.5, 1.0, 1.5}) {
        for (double delta : {1.0, 0.1}) {
            const double i1 = phi_integral(delta, 1.0, 1.0, 1e3, a);
            const double i2 = phi_integral(delta, 1.0, 1.0, 1e4, a);
            CHECK(std::isfinite(i1));
            CHECK(i2 - i1 <= 2e-2 * i1);  // tail already negligible
            CHECK(i1 > 0.0);
        }
    }
    // Exact value for alpha = 1, delta = r = 1: int = 2.
    CHECK(phi_integral(1.0, 1.0, 1.0, 1e6, 1.0) == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("theta CSV export lists the four pieces") {
    const BarrierParams p = moderate_params();
    const PiecewiseTheta theta = build_theta(p);
    std::ostringstream os;
    theta.write_csv(os);
    const std::string text = os.str();
    CHECK(text.find("reciprocal") != std::string::npos);
    CHECK(text.find("cubic") != std::string::npos);
    CHECK(text.find("quartic") != std::string::npos);
    CHECK(text.find("constant") != std::string::npos);
}

TEST_CASE("invalid barrier parameters are rejected") {
    BarrierParams p = moderate_params();
    p.K1 = p.r * p.eps / 4.0 / p.q();  // K1 q too large
    CHECK_THROWS(build_theta(p));
    BarrierParams p2 = moderate_params();
    p2.eps = 0.3;  // > r/4
    CHECK_THROWS(build_theta(p2));
    BarrierParams p3 = moderate_params();
    p3.N = 40.0;  // K1 q + K2 > eps/N now
    CHECK_THROWS(build_theta(p3));
}
