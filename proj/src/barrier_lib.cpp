#include "recti/barrier_lib.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace recti {

void BarrierParams::validate() const {
    require(r > 0.0, "BarrierParams: r must be positive");
    require(eps > 0.0 && eps <= r / 4.0, "BarrierParams: eps must lie in (0, r/4]");
    require(eta_ring > 0.0 && eta_ring <= eps, "BarrierParams: eta_ring must lie in (0, eps]");
    require(N >= 4.0, "BarrierParams: N must be at least 4");
    require(b > 0.0, "BarrierParams: b must be positive");
    const double cap = r * eps / 8.0;
    require(K1 > 0.0 && K1 * q() < cap, "BarrierParams: K1 q must lie in (0, r eps/8)");
    require(K2 > 0.0 && K2 < cap, "BarrierParams: K2 must lie in (0, r eps/8)");
    require(K1 * q() + K2 <= eps / N, "BarrierParams: K1 q + K2 must not exceed eps/N");
}

PiecewiseTheta::PiecewiseTheta(double r, double eps, double K1, double K2)
    : r_(r), eps_(eps), K1_(K1), K2_(K2) {
    q_ = r * r - (r - eps) * (r - eps);
    T0_ = (r - eps) * (r - eps);
    T1_ = T0_ + K1 * q_;
    T2_ = T1_ + K2;
    th0_ = 1.0 / q_;
    d1_0_ = 1.0 / (q_ * q_);
    d2_0_ = 2.0 / (q_ * q_ * q_);
    th1_ = (1.0 + K1 + 2.0 * K1 * K1 / 3.0) / q_;
    d1_1_ = (1.0 + K1) / (q_ * q_);
    sup_ = th1_ + K2 * d1_1_ / 2.0;
}

double PiecewiseTheta::K() const {
    const double re = r_ - eps_;
    return (K1_ * q_ + K2_) / (std::sqrt(re * re + K1_ * q_ + K2_) + re);
}

double PiecewiseTheta::value(double v) const {
    require(v >= 0.0 && v < r_ * r_, "PiecewiseTheta: argument outside [0, r^2)");
    if (v <= T0_) return 1.0 / (r_ * r_ - v);
    if (v <= T1_) {
        const double u = v - T0_;
        return th0_ + d1_0_ * u + 0.5 * d2_0_ * u * u - u * u * u / (3.0 * std::pow(q_, 4) * K1_);
    }
    if (v <= T2_) {
        const double u = v - T1_;
        return th1_ + d1_1_ * u + d1_1_ / (2.0 * std::pow(K2_, 3)) *
                                      (-2.0 * K2_ * u * u * u + u * u * u * u);
    }
    return sup_;
}

double PiecewiseTheta::deriv(double v) const {
    require(v >= 0.0 && v < r_ * r_, "PiecewiseTheta: argument outside [0, r^2)");
    if (v <= T0_) {
        const double w = r_ * r_ - v;
        return 1.0 / (w * w);
    }
    if (v <= T1_) {
        const double u = v - T0_;
        return d1_0_ + d2_0_ * u - u * u / (std::pow(q_, 4) * K1_);
    }
    if (v <= T2_) {
        const double u = v - T1_;
        return d1_1_ + d1_1_ / (2.0 * std::pow(K2_, 3)) * (-6.0 * K2_ * u * u + 4.0 * u * u * u);
    }
    return 0.0;
}

double PiecewiseTheta::second_deriv(double v) const {
    require(v >= 0.0 && v < r_ * r_, "PiecewiseTheta: argument outside [0, r^2)");
    if (v <= T0_) {
        const double w = r_ * r_ - v;
        return 2.0 / (w * w * w);
    }
    if (v <= T1_) {
        const double u = v - T0_;
        return d2_0_ - 2.0 * u / (std::pow(q_, 4) * K1_);
    }
    if (v <= T2_) {
        const double u = v - T1_;
        return d1_1_ / (2.0 * std::pow(K2_, 3)) * (-12.0 * K2_ * u + 12.0 * u * u);
    }
    return 0.0;
}

double PiecewiseTheta::value_at(int i) const {
    switch (i) {
        case 0: return th0_;
        case 1: return th1_;
        case 2: return sup_;
        default: throw std::invalid_argument("PiecewiseTheta: breakpoint index");
    }
}

double PiecewiseTheta::deriv_one_sided(int i, int side) const {
    (void)side;  // the construction matches left and right values at every joint
    switch (i) {
        case 0: return d1_0_;
        case 1: return d1_1_;
        case 2: return 0.0;
        default: throw std::invalid_argument("PiecewiseTheta: breakpoint index");
    }
}

double PiecewiseTheta::second_deriv_one_sided(int i, int side) const {
    (void)side;
    switch (i) {
        case 0: return d2_0_;
        case 1: return 0.0;
        case 2: return 0.0;
        default: throw std::invalid_argument("PiecewiseTheta: breakpoint index");
    }
}

double PiecewiseTheta::piece_end_value(int i) const {
    switch (i) {
        case 0: return 1.0 / q_;
        case 1: {
            const double u = K1_ * q_;
            return th0_ + d1_0_ * u + 0.5 * d2_0_ * u * u -
                   u * u * u / (3.0 * std::pow(q_, 4) * K1_);
        }
        case 2: {
            const double u = K2_;
            return th1_ + d1_1_ * u +
                   d1_1_ / (2.0 * std::pow(K2_, 3)) * (-2.0 * K2_ * u * u * u + u * u * u * u);
        }
        default: throw std::invalid_argument("PiecewiseTheta: piece index");
    }
}

double PiecewiseTheta::piece_end_deriv(int i) const {
    switch (i) {
        case 0: return 1.0 / (q_ * q_);
        case 1: {
            const double u = K1_ * q_;
            return d1_0_ + d2_0_ * u - u * u / (std::pow(q_, 4) * K1_);
        }
        case 2: {
            const double u = K2_;
            return d1_1_ + d1_1_ / (2.0 * std::pow(K2_, 3)) *
                               (-6.0 * K2_ * u * u + 4.0 * u * u * u);
        }
        default: throw std::invalid_argument("PiecewiseTheta: piece index");
    }
}

double PiecewiseTheta::piece_end_second(int i) const {
    switch (i) {
        case 0: return 2.0 / (q_ * q_ * q_);
        case 1: {
            const double u = K1_ * q_;
            return d2_0_ - 2.0 * u / (std::pow(q_, 4) * K1_);
        }
        case 2: {
            const double u = K2_;
            return d1_1_ / (2.0 * std::pow(K2_, 3)) * (-12.0 * K2_ * u + 12.0 * u * u);
        }
        default: throw std::invalid_argument("PiecewiseTheta: piece index");
    }
}

void PiecewiseTheta::write_csv(std::ostream& os) const {
    os << "piece,lo,hi,c0,c1,c2,c3,c4\n";
    char buf[512];
    std::snprintf(buf, sizeof buf, "reciprocal,%.17g,%.17g,,,,,\n", 0.0, T0_);
    os << buf;
    std::snprintf(buf, sizeof buf, "cubic,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,\n", T0_, T1_,
                  th0_, d1_0_, 0.5 * d2_0_, -1.0 / (3.0 * std::pow(q_, 4) * K1_));
    os << buf;
    std::snprintf(buf, sizeof buf, "quartic,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", T1_,
                  T2_, th1_, d1_1_, 0.0, -d1_1_ / std::pow(K2_, 2),
                  d1_1_ / (2.0 * std::pow(K2_, 3)));
    os << buf;
    std::snprintf(buf, sizeof buf, "constant,%.17g,%.17g,%.17g,,,,\n", T2_, r_ * r_, sup_);
    os << buf;
}

PiecewiseTheta build_theta(const BarrierParams& params) {
    params.validate();
    return PiecewiseTheta(params.r, params.eps, params.K1, params.K2);
}

BarrierParams choose_theta_params(double r, double eps, double N) {
    require(r > 0.0, "choose_theta_params: r must be positive");
    require(eps > 0.0 && eps <= r / 4.0, "choose_theta_params: eps must lie in (0, r/4]");
    require(N >= 4.0, "choose_theta_params: N must be at least 4");
    const double q = r * r - (r - eps) * (r - eps);
    double k1q = r * eps / 16.0;
    double k2 = r * eps / 16.0;
    const double sup_gap_cap = std::pow(N, -6.0);
    for (int iter = 0; iter < 2048; ++iter) {
        const double K1 = k1q / q;
        const double sup_gap = (K1 + 2.0 * K1 * K1 / 3.0) / q + k2 / (2.0 * q * q) * (1.0 + K1);
        if (k1q + k2 <= eps / N && sup_gap <= sup_gap_cap) {
            BarrierParams p{r, eps, eps, N, K1, k2, 1.0};
            p.validate();
            return p;
        }
        k1q *= 0.5;
        k2 *= 0.5;
    }
    throw std::runtime_error("choose_theta_params: failed to satisfy the selection inequalities");
}

double lambda_profile(double norm_sq_val, double r, double alpha) {
    const double w = r * r - norm_sq_val;
    if (w <= 0.0) return 0.0;
    return std::pow(w, alpha / 2.0);
}

double lambda_eval(std::span<const double> y, double r, double alpha) {
    return lambda_profile(norm_sq(y), r, alpha);
}

double h_profile(double norm_sq_val, double r, double alpha) {
    const double w = r * r - norm_sq_val;
    if (w < 0.0) return 0.0;
    require(w != 0.0, "h_profile: evaluation exactly on the boundary sphere");
    return std::pow(w, alpha / 2.0 - 1.0);
}

double h_eval(std::span<const double> y, double r, double alpha) {
    return h_profile(norm_sq(y), r, alpha);
}

double Theta_eval(double v, double r, double eps) {
    require(v >= 0.0 && v < r * r, "Theta_eval: argument outside [0, r^2)");
    const double T0 = (r - eps) * (r - eps);
    if (v <= T0) return 1.0 / (r * r - v);
    const double q = r * r - T0;
    const double t = (v - T0) / q;
    // (1 - t^3)/(q (1-t)) = (1 + t + t^2)/q, finite up to v -> r^2.
    return (1.0 + t + t * t) / q;
}

double Theta_deriv(double v, double r, double eps) {
    require(v >= 0.0 && v < r * r, "Theta_deriv: argument outside [0, r^2)");
    const double T0 = (r - eps) * (r - eps);
    if (v <= T0) {
        const double w = r * r - v;
        return 1.0 / (w * w);
    }
    const double q = r * r - T0;
    const double t = (v - T0) / q;
    return (1.0 + 2.0 * t) / (q * q);
}

double g_indicator(std::span<const double> y, const Ball& ball, double eps, double eta_ring) {
    const double rho = dist(y, ball.center);
    const double r = ball.radius;
    return (rho > r + eps && rho < r + eps + eta_ring) ? 1.0 : 0.0;
}

double f_theta_eval(std::span<const double> y_rel, const PiecewiseTheta& theta, double r,
                    double alpha) {
    const double v = norm_sq(y_rel);
    if (v >= r * r) return 0.0;
    return lambda_profile(v, r, alpha) * theta.value(v);
}

double F_Theta_eval(std::span<const double> y_rel, double r, double eps, double alpha) {
    const double v = norm_sq(y_rel);
    if (v >= r * r) return 0.0;
    return lambda_profile(v, r, alpha) * Theta_eval(v, r, eps);
}

double barrier_coefficient(const BarrierParams& params, double alpha) {
    return params.b * params.eta_ring * std::pow(params.r, 1.0 - alpha / 2.0) /
           std::pow(params.eps, alpha / 2.0);
}

double f_b_theta_eval(std::span<const double> y, const BarrierParams& params,
                      const PiecewiseTheta& theta, const Ball& ball, double alpha) {
    Vec rel(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) rel[i] = y[i] - ball.center[i];
    return barrier_coefficient(params, alpha) * f_theta_eval(rel, theta, ball.radius, alpha) +
           g_indicator(y, ball, params.eps, params.eta_ring);
}

double F_b_Theta_eval(std::span<const double> y, const BarrierParams& params, const Ball& ball,
                      double alpha) {
    Vec rel(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) rel[i] = y[i] - ball.center[i];
    return barrier_coefficient(params, alpha) *
               F_Theta_eval(rel, ball.radius, params.eps, alpha) +
           g_indicator(y, ball, params.eps, params.eta_ring);
}

double phi_profile(double delta, double r, double y, double alpha) {
    require(y > r, "phi_profile: y must exceed r");
    require(delta > 0.0 && delta <= r, "phi_profile: delta must lie in (0, r]");
    return std::pow(delta, alpha / 2.0) * std::pow(r, alpha / 2.0) /
           (std::pow(y - r, alpha / 2.0) * std::pow(y, alpha / 2.0) * (y + delta - r));
}

double phi_comparison(std::span<const double> x, double y, const Ball& ball, double alpha) {
    const double rho = dist(x, ball.center);
    require(rho < ball.radius, "phi_comparison: x must lie in the open ball");
    return phi_profile(ball.radius - rho, ball.radius, y, alpha);
}

namespace {

// Adaptive Gauss-Legendre bisection for the smooth 1d integrals here.
template <class F>
double adaptive_gl(F&& f, double a, double b, double tol, int depth = 0) {
    static const double gx[8] = {-0.9602898564975363, -0.7966664774136267,
                                 -0.5255324099163290, -0.1834346424956498,
                                 0.1834346424956498,  0.5255324099163290,
                                 0.7966664774136267,  0.9602898564975363};
    static const double gw[8] = {0.1012285362903763, 0.2223810344533745,
                                 0.3137066458778873, 0.3626837833783620,
                                 0.3626837833783620, 0.3137066458778873,
                                 0.2223810344533745, 0.1012285362903763};
    auto panel = [&](double lo, double hi) {
        const double c = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
        double s = 0.0;
        for (int k = 0; k < 8; ++k) s += gw[k] * f(c + hw * gx[k]);
        return s * hw;
    };
    const double whole = panel(a, b);
    const double mid = 0.5 * (a + b);
    const double split = panel(a, mid) + panel(mid, b);
    if (depth >= 48 || std::abs(split - whole) <= tol) return split;
    return adaptive_gl(f, a, mid, 0.5 * tol, depth + 1) +
           adaptive_gl(f, mid, b, 0.5 * tol, depth + 1);
}

}  // namespace

double phi_integral(double delta, double r, double lo, double hi, double alpha) {
    require(r <= lo && lo < hi, "phi_integral: need r <= lo < hi");
    // Substitute u = (y-r)^{1-alpha/2}: the edge factor (y-r)^{-alpha/2} dy
    // becomes du/(1-alpha/2) exactly and the remainder is smooth.
    const double m = 1.0 - alpha / 2.0;
    const double u_lo = std::pow(lo - r, m);
    const double u_hi = std::pow(hi - r, m);
    const double scale = std::pow(delta, alpha / 2.0) * std::pow(r, alpha / 2.0);
    auto integrand = [&](double u) {
        const double y = r + std::pow(u, 1.0 / m);
        return scale / (std::pow(y, alpha / 2.0) * (y + delta - r)) / m;
    };
    const double crude = std::abs(integrand(0.5 * (u_lo + u_hi))) * (u_hi - u_lo) + 1e-300;
    return adaptive_gl(integrand, u_lo, u_hi, 1e-11 * crude + 1e-14 * (u_hi - u_lo));
}

ThetaAuditReport theta_class_audit(const PiecewiseTheta& theta, const BarrierParams& params,
                                   int grid_n) {
    ThetaAuditReport rep;
    const double r = theta.r();
    const double q = theta.q();
    const double r2 = r * r;
    const double T0 = theta.T0(), T2 = theta.T2();

    // (i) branch identities.
    bool ident = true;
    for (int i = 0; i <= 64; ++i) {
        const double v = T0 * i / 64.0;
        if (std::abs(theta.value(v) - 1.0 / (r2 - v)) > 1e-12 / (r2 - v)) ident = false;
    }
    for (int i = 0; i <= 64; ++i) {
        const double v = T2 + (r2 - T2) * (i + 1) / 66.0;
        if (theta.value(v) != theta.sup_value()) ident = false;
    }
    rep.piece_identity_ok = ident;

    const double K = theta.K();
    rep.window_ok = K > 0.0 && K <= params.eps / 4.0 &&
                    std::abs((r - params.eps + K) * (r - params.eps + K) - T2) <
                        1e-9 * std::max(1.0, T2);

    // (ii) C^2 joints: each piece evaluated at its right endpoint in exact
    // local coordinates must reproduce the next piece's closed-form start
    // data. Two algebraic routes to the same numbers, so transcription
    // slips show without finite-difference conditioning problems.
    auto close = [](double a, double b, double scale) {
        return std::abs(a - b) <= 1e-9 * std::max({std::abs(a), std::abs(b), scale});
    };
    bool c2 = true;
    for (int i = 0; i < 3; ++i) {
        c2 = c2 && close(theta.piece_end_value(i), theta.value_at(i), 1.0 / q);
        c2 = c2 && close(theta.piece_end_deriv(i), theta.deriv_one_sided(i, +1), 1.0 / (q * q));
        c2 = c2 && close(theta.piece_end_second(i), theta.second_deriv_one_sided(i, +1),
                         2.0 / (q * q * q));
        // The evaluator hands off to the next branch across the joint.
        const double v = (i == 0 ? theta.T0() : i == 1 ? theta.T1() : theta.T2());
        const double above = std::min(v * (1.0 + 1e-15), r2 * (1.0 - 1e-15));
        c2 = c2 && close(theta.value(above), theta.value_at(i), 1.0 / q);
    }
    rep.c2_ok = c2;

    // Grid checks, log-refined toward r^2.
    rep.increasing_ok = true;
    rep.max_second_deriv_ok = true;
    rep.value_bound_ok = true;
    rep.deriv_bound_ok = true;
    double c1 = std::numeric_limits<double>::infinity();
    double c2obs = 0.0;
    double max_dd = -std::numeric_limits<double>::infinity();
    const double d2_at_T0 = theta.second_deriv_one_sided(0, -1);
    for (int i = 0; i <= grid_n; ++i) {
        const double t = static_cast<double>(i) / grid_n;
        const double v = r2 * (1.0 - std::pow(1e-8, t));  // 0 up to r^2 (1 - 1e-8)
        const double val = theta.value(v);
        const double dv = theta.deriv(v);
        const double dd = theta.second_deriv(v);
        if (val > 4.0 / q * (1 + 1e-12)) rep.value_bound_ok = false;
        if (dv > 3.0 / (q * q) * (1 + 1e-12)) rep.deriv_bound_ok = false;
        max_dd = std::max(max_dd, dd);
        const double env = std::max(r2 - v, q);
        c1 = std::min(c1, val * env);
        c2obs = std::max(c2obs, val * env);
    }
    // Monotonicity sweep of the increasing window (T0, T2). Strict increase
    // is checked through the derivative away from the flat end, where the
    // analytic increments sink below one ulp of the value.
    double prev = theta.value(T0);
    const double W = T2 - T0;
    for (int i = 1; i <= grid_n; ++i) {
        const double v = T0 + W * i / (grid_n + 1.0);
        const double val = theta.value(v);
        if (val < prev * (1.0 - 4e-16)) rep.increasing_ok = false;
        if (v <= T2 - 1e-6 * W && theta.deriv(v) <= 0.0) rep.increasing_ok = false;
        prev = val;
    }
    if (!(theta.value(T2 - 1e-9 * W) > theta.value(T0))) rep.increasing_ok = false;
    if (max_dd > d2_at_T0 * (1 + 1e-9)) rep.max_second_deriv_ok = false;
    rep.observed_c1 = c1;
    rep.observed_c2 = c2obs;
    return rep;
}

}  // namespace recti
