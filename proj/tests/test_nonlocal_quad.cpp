#include "recti/nonlocal_quad.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace recti;

namespace {

QuadratureSpec tight_spec(double abs_tol = 1e-9) {
    QuadratureSpec q;
    q.abs_tol = abs_tol;
    q.rel_tol = 1e-9;
    return q;
}

std::vector<Vec> quarter_grid(const Ball& ball, int n_radii, int n_angles, double outer_frac) {
    std::vector<Vec> grid;
    for (int i = 0; i < n_radii; ++i) {
        const double rho = ball.radius * outer_frac * i / std::max(1, n_radii - 1);
        for (int j = 0; j < n_angles; ++j) {
            const double phi = 1.5707963267948966 * j / std::max(1, n_angles - 1);
            Vec x = ball.center;
            x[0] += rho * std::cos(phi);
            x[ball.dim() - 1] += rho * std::sin(phi);
            grid.push_back(std::move(x));
        }
    }
    return grid;
}

}  // namespace

TEST_CASE("constant fields are annihilated exactly") {
    ScalarField constant;
    constant.center = {0.0, 0.0};
    constant.eval = [](std::span<const double>) { return 3.7; };
    Vec x{0.2, -0.1}, v{0.0, 1.0};
    const GeneratorValue gv = pv_directional(constant, x, v, 1.2, tight_spec());
    CHECK(gv.value == 0.0);
    CHECK(gv.converged);
}

TEST_CASE("zero direction and dimension mismatches are rejected") {
    const Ball ball({0.0, 0.0}, 1.0);
    ScalarField lam = make_lambda_field(ball, 1.0);
    Vec x{0.1, 0.2}, zero{0.0, 0.0};
    CHECK_THROWS(pv_directional(lam, x, zero, 1.0, tight_spec()));
    Vec v3{0.0, 0.0, 1.0};
    CHECK_THROWS(pv_directional(lam, x, v3, 1.0, tight_spec()));
}

TEST_CASE("directional generator of lambda is the negative constant") {
    const Ball ball({0.0, 0.0}, 1.0);
    Vec e_d{0.0, 1.0};
    for (double alpha : {0.5, 1.0, 1.5}) {
        const double target = a_tilde_alpha(StabilityIndex(alpha));
        ScalarField lam = make_lambda_field(ball, alpha);
        double worst = 0.0;
        for (const auto& x : quarter_grid(ball, 5, 4, 0.95)) {
            const GeneratorValue gv =
                pv_directional(lam, x, e_d, alpha, tight_spec(1e-9 * target));
            worst = std::max(worst, std::abs(gv.value + target) / target);
        }
        INFO("alpha = ", alpha, " worst rel dev = ", worst);
        CHECK(worst <= 1e-6);
    }
}

TEST_CASE("directional generator of h vanishes") {
    const Ball ball({0.0, 0.0}, 1.0);
    Vec e_d{0.0, 1.0};
    for (double alpha : {0.5, 1.0, 1.5}) {
        ScalarField hf = make_h_field(ball, alpha);
        double worst = 0.0;
        for (const auto& x : quarter_grid(ball, 5, 4, 0.95)) {
            Vec rel(2);
            for (int i = 0; i < 2; ++i) rel[i] = x[i] - ball.center[i];
            const double hx = h_eval(rel, ball.radius, alpha);
            QuadratureSpec q = tight_spec(1e-7 * hx);
            const GeneratorValue gv = pv_directional(hf, x, e_d, alpha, q);
            worst = std::max(worst, std::abs(gv.value) / hx);
        }
        INFO("alpha = ", alpha, " worst scaled dev = ", worst);
        CHECK(worst <= 1e-5);
    }
}

TEST_CASE("generator values are invariant under transverse rotation") {
    const Ball ball({0.0, 0.0, 0.0}, 1.0);
    ScalarField lam = make_f_theta_field(ball, build_theta(choose_theta_params(1.0, 0.25, 4.0)),
                                         1.3);
    Vec e_d{0.0, 0.0, 1.0};
    // Same |x_tilde| and x_d, rotated in the transverse plane.
    Vec x1{0.4, 0.0, 0.35};
    Vec x2{0.4 * std::cos(1.1), 0.4 * std::sin(1.1), 0.35};
    const GeneratorValue g1 = pv_directional(lam, x1, e_d, 1.3, tight_spec());
    const GeneratorValue g2 = pv_directional(lam, x2, e_d, 1.3, tight_spec());
    CHECK(g1.value ==
          doctest::Approx(g2.value).epsilon(1e-8).scale(std::abs(g1.value) + 1e-12));
}

TEST_CASE("linearity within summed error estimates") {
    const Ball ball({0.0, 0.0}, 1.0);
    const double alpha = 0.9;
    ScalarField lam = make_lambda_field(ball, alpha);
    ScalarField hf = make_big_f_theta_field(ball, 0.25, alpha);
    ScalarField combo = linear_combination(0.7, lam, -1.3, hf);
    Vec x{0.25, 0.4}, e_d{0.0, 1.0};
    const GeneratorValue ga = pv_directional(lam, x, e_d, alpha, tight_spec());
    const GeneratorValue gb = pv_directional(hf, x, e_d, alpha, tight_spec());
    const GeneratorValue gc = pv_directional(combo, x, e_d, alpha, tight_spec());
    const double expected = 0.7 * ga.value - 1.3 * gb.value;
    const double budget = 0.7 * ga.error_estimate + 1.3 * gb.error_estimate +
                          gc.error_estimate + 1e-12;
    CHECK(std::abs(gc.value - expected) <= std::max(budget, 1e-8 * std::abs(expected)));
}

TEST_CASE("scaling reduction: |v|^alpha homogeneity and passthrough") {
    const Ball ball({0.0, 0.0}, 1.0);
    for (double alpha : {0.7, 1.4}) {
        ScalarField lam = make_lambda_field(ball, alpha);
        Vec x{0.3, 0.2};
        Vec v2{0.0, 2.0}, unit{0.0, 1.0};
        const GeneratorValue direct = pv_directional(lam, x, v2, alpha, tight_spec());
        const GeneratorValue reduced = scaling_reduce(lam, x, v2, alpha, tight_spec());
        CHECK(direct.value ==
              doctest::Approx(reduced.value).epsilon(1e-6));
        const GeneratorValue base = pv_directional(lam, x, unit, alpha, tight_spec());
        CHECK(direct.value / base.value == doctest::Approx(std::pow(2.0, alpha)).epsilon(1e-6));
        const GeneratorValue same = scaling_reduce(lam, x, unit, alpha, tight_spec());
        CHECK(same.value == doctest::Approx(base.value).epsilon(1e-12));
    }
    // Radial symmetry: e_1 and e_d give the same value on radial fields.
    ScalarField lam = make_lambda_field(ball, 1.1);
    Vec x{0.15, 0.45}, e1{1.0, 0.0}, e2{0.0, 1.0};
    Vec x_swapped{0.45, 0.15};
    const GeneratorValue a1 = pv_directional(lam, x, e1, 1.1, tight_spec());
    const GeneratorValue a2 = pv_directional(lam, x_swapped, e2, 1.1, tight_spec());
    CHECK(a1.value == doctest::Approx(a2.value).epsilon(1e-8));
}

TEST_CASE("full generator sums the column contributions") {
    for (int dim : {2, 3}) {
        Vec center(dim, 0.0);
        const Ball ball(center, 1.0);
        const CoefficientField id = builtin_field("identity", dim);
        ScalarField lam = make_lambda_field(ball, 1.0);
        Vec x(dim, 0.0);
        x[0] = 0.2;
        const double target = dim * a_tilde_alpha(StabilityIndex(1.0));
        const GeneratorValue gv = full_generator(lam, x, id, 1.0, tight_spec());
        CHECK(gv.value == doctest::Approx(-target).epsilon(1e-6));
    }
    // Radial f with L_{e_d} f <= 0 on a grid keeps the sign under any field.
    const Ball ball({0.0, 0.0}, 1.0);
    ScalarField lam2 = make_lambda_field(ball, 1.2);
    for (const auto& name : {"identity", "diag2", "rotscale"}) {
        const CoefficientField field = builtin_field(name, 2);
        for (const auto& x : quarter_grid(ball, 3, 3, 0.8)) {
            const GeneratorValue gv = full_generator(lam2, x, field, 1.2, tight_spec());
            CHECK(gv.value < 0.0);
        }
    }
}

TEST_CASE("ring generator closed form at the center") {
    const Ball ball({0.0, 0.0}, 1.0);
    Vec c{0.0, 0.0};
    const double v = Lg_closed_form(c, ball, 0.25, 0.25, 1.0);
    const double expected = 2.0 / 3.14159265358979323846 * (1.0 / 1.25 - 1.0 / 1.5);
    CHECK(v == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("ring generator closed form agrees with quadrature") {
    const Ball ball({0.0, 0.0}, 1.0);
    const double eps = 0.25, eta = 0.125;
    for (double alpha : {0.6, 1.0, 1.5}) {
        ScalarField gf = make_g_field(ball, eps, eta);
        Vec e_d{0.0, 1.0};
        double worst = 0.0;
        for (const auto& x : quarter_grid(ball, 10, 5, 0.995)) {
            Vec rel(2);
            for (int i = 0; i < 2; ++i) rel[i] = x[i] - ball.center[i];
            const double exact = Lg_closed_form(rel, ball, eps, eta, alpha);
            QuadratureSpec q = tight_spec(1e-9 * exact);
            const GeneratorValue gv = pv_directional(gf, x, e_d, alpha, q);
            worst = std::max(worst, std::abs(gv.value - exact) / exact);
        }
        INFO("alpha = ", alpha, " worst rel dev = ", worst);
        CHECK(worst <= 1e-6);
    }
}

TEST_CASE("sign audits find stable ladder constants") {
    const Ball ball({0.0, 0.0}, 1.0);
    const double alpha = 1.0, eps = 0.25;
    const double N = default_shell_split(1.0, eps);
    BarrierParams params = choose_theta_params(1.0, eps, N);
    const PiecewiseTheta theta = build_theta(params);
    QuadratureSpec q = tight_spec(1e-10);
    const auto grid = make_audit_grid(ball, eps, N, 60, 1e-3, 2);
    const SignAuditReport sup = sign_audit_super(theta, params, ball, alpha, grid, q);
    CHECK(sup.found);
    CHECK(sup.b > 0.0);
    CHECK(sup.worst_margin >= -1e-6);
    const SignAuditReport sub = sign_audit_sub(params, ball, alpha, grid, q);
    CHECK(sub.found);
    CHECK(sub.b > 0.0);
    CHECK(sub.worst_margin >= -1e-6);
    // All three case regions are represented.
    bool saw[4] = {false, false, false, false};
    for (const auto& p : sup.points) saw[p.region] = true;
    CHECK(saw[1]);
    CHECK(saw[2]);
    CHECK(saw[3]);
    // Refinement stability within one ladder step.
    const auto grid2 = make_audit_grid(ball, eps, N, 120, 1e-3, 2);
    const SignAuditReport sup2 = sign_audit_super(theta, params, ball, alpha, grid2, q);
    CHECK(std::abs(sup2.ladder_exponent - sup.ladder_exponent) <= 1);
    const SignAuditReport sub2 = sign_audit_sub(params, ball, alpha, grid2, q);
    CHECK(std::abs(sub2.ladder_exponent - sub.ladder_exponent) <= 1);
    // Serialization shapes.
    std::ostringstream csv;
    sup.write_csv(csv);
    CHECK(csv.str().find("radius,region") != std::string::npos);
    CHECK(sup.to_json().find("\"kind\":\"super\"") != std::string::npos);
}

TEST_CASE("combined barrier field decomposes through the generator") {
    // Exercises the edge-factor merge of the profile part with the ring
    // indicator inside one field.
    const Ball ball({0.0, 0.0}, 1.0);
    const double alpha = 1.2, eps = 0.25;
    BarrierParams params = choose_theta_params(1.0, eps, 4.0);
    params.b = 8.0;
    const PiecewiseTheta theta = build_theta(params);
    ScalarField combined = make_f_b_theta_field(ball, params, theta, alpha);
    ScalarField profile = make_f_theta_field(ball, theta, alpha);
    ScalarField ring = make_g_field(ball, params.eps, params.eta_ring);
    const double coeff = barrier_coefficient(params, alpha);
    Vec e_d{0.0, 1.0};
    for (Vec x : {Vec{0.2, 0.1}, Vec{0.0, 0.85}, Vec{0.6, 0.55}}) {
        const GeneratorValue whole = pv_directional(combined, x, e_d, alpha, tight_spec());
        const GeneratorValue part_f = pv_directional(profile, x, e_d, alpha, tight_spec());
        const GeneratorValue part_g = pv_directional(ring, x, e_d, alpha, tight_spec());
        const double expected = coeff * part_f.value + part_g.value;
        CHECK(whole.value ==
              doctest::Approx(expected).epsilon(1e-7).scale(std::abs(expected) + 1.0));
        // Point values decompose too.
        const double direct = f_b_theta_eval(x, params, theta, ball, alpha);
        Vec rel{x[0], x[1]};
        CHECK(direct == doctest::Approx(coeff * f_theta_eval(rel, theta, 1.0, alpha) +
                                        g_indicator(x, ball, params.eps, params.eta_ring))
                            .epsilon(1e-12));
    }
    ScalarField big = make_big_f_b_theta_field(ball, params, alpha);
    Vec x{0.3, 0.2};
    const GeneratorValue bg = pv_directional(big, x, e_d, alpha, tight_spec());
    CHECK(std::isfinite(bg.value));
}

TEST_CASE("interior negativity of the profile generator away from the shell") {
    // Deep interior, no ring nearby: the barrier profile has strictly
    // negative directional generator.
    const Ball ball({0.0, 0.0}, 1.0);
    const double alpha = 1.0, eps = 0.25;
    BarrierParams params = choose_theta_params(1.0, eps, 4.0);
    const PiecewiseTheta theta = build_theta(params);
    ScalarField f = make_f_theta_field(ball, theta, alpha);
    Vec e_d{0.0, 1.0};
    for (const auto& x : quarter_grid(ball, 4, 3, 0.6)) {
        const GeneratorValue gv = pv_directional(f, x, e_d, alpha, tight_spec());
        CHECK(gv.value < 0.0);
    }
}
