#pragma once

#include "recti/common.hpp"
#include "recti/geometry_fields.hpp"

#include <array>
#include <iosfwd>

namespace recti {

// Parameters of the piecewise barrier profile. K1*q and K2 must lie in
// (0, r*eps/8) and K = K1*q + K2 <= eps/N.
struct BarrierParams {
    double r;
    double eps;
    double eta_ring;
    double N;
    double K1;
    double K2;
    double b = 1.0;

    double q() const { return r * r - (r - eps) * (r - eps); }
    void validate() const;
};

// C^2 increasing modification of v -> 1/(r^2-v) that flattens to a constant
// before r^2. Pieces are stored in shifted-monomial form about their left
// breakpoints, with coefficients read off the closed-form construction.
class PiecewiseTheta {
public:
    PiecewiseTheta(double r, double eps, double K1, double K2);

    double operator()(double v) const { return value(v); }
    double value(double v) const;
    double deriv(double v) const;
    double second_deriv(double v) const;

    double T0() const { return T0_; }
    double T1() const { return T1_; }
    double T2() const { return T2_; }
    double q() const { return q_; }
    double r() const { return r_; }
    double eps() const { return eps_; }
    double K1() const { return K1_; }
    double K2() const { return K2_; }
    double sup_value() const { return sup_; }
    // Width K of the flattening window: (r-eps+K)^2 = T2.
    double K() const;

    // One-sided values at a breakpoint (side < 0: left, side > 0: right).
    double value_at(int i) const;
    double deriv_one_sided(int i, int side) const;
    double second_deriv_one_sided(int i, int side) const;

    // Piece i in {0: reciprocal, 1: cubic, 2: quartic} evaluated at its
    // right endpoint in exact local coordinates (u = piece width), the
    // well-conditioned route for checking the joints.
    double piece_end_value(int i) const;
    double piece_end_deriv(int i) const;
    double piece_end_second(int i) const;

    void write_csv(std::ostream& os) const;

private:
    double r_, eps_, q_, K1_, K2_, T0_, T1_, T2_, sup_;
    double th0_, d1_0_, d2_0_;  // value/derivatives at T0 (left limits)
    double th1_, d1_1_;         // at T1
};

PiecewiseTheta build_theta(const BarrierParams& params);

// Deterministic choice of K1, K2 for given (r, eps, N): start both range
// caps at r*eps/16 and halve until K1 q + K2 <= eps/N and
// sup theta - 1/q <= 1/N^6 (the exponent 6 dominates 4+alpha for every
// alpha in (0,2), so one choice serves all stability indices).
BarrierParams choose_theta_params(double r, double eps, double N);

// (r^2-|y|^2)^{alpha/2} inside B(0,r), 0 outside.
double lambda_eval(std::span<const double> y, double r, double alpha);
double lambda_profile(double norm_sq_val, double r, double alpha);

// (r^2-|y|^2)^{alpha/2-1} inside, 0 outside; evaluation exactly on |y| = r
// is rejected (the profile diverges there).
double h_eval(std::span<const double> y, double r, double alpha);
double h_profile(double norm_sq_val, double r, double alpha);

// The damped reciprocal profile: 1/(r^2-v) on [0,(r-eps)^2], then
// (1/(r^2-v)) (1 - ((v-(r-eps)^2)/q)^3) up to r^2, evaluated in the
// factored form (1 + t + t^2)/q which is finite as v -> r^2.
double Theta_eval(double v, double r, double eps);
double Theta_deriv(double v, double r, double eps);

// Indicator of the open ring |y - z| in (r+eps, r+eps+eta).
double g_indicator(std::span<const double> y, const Ball& ball, double eps, double eta_ring);

// f_theta = lambda * theta(|.|^2) inside the ball, 0 outside.
double f_theta_eval(std::span<const double> y_rel, const PiecewiseTheta& theta, double r,
                    double alpha);
// F_Theta = lambda * Theta(|.|^2).
double F_Theta_eval(std::span<const double> y_rel, double r, double eps, double alpha);

// Barrier coefficient b eta r^{1-alpha/2} / eps^{alpha/2}.
double barrier_coefficient(const BarrierParams& params, double alpha);

double f_b_theta_eval(std::span<const double> y, const BarrierParams& params,
                      const PiecewiseTheta& theta, const Ball& ball, double alpha);
double F_b_Theta_eval(std::span<const double> y, const BarrierParams& params, const Ball& ball,
                      double alpha);

// Comparison density profile: delta^{alpha/2} r^{alpha/2} /
// ((y-r)^{alpha/2} y^{alpha/2} (y + delta - r)) for y > r.
double phi_comparison(std::span<const double> x, double y, const Ball& ball, double alpha);
double phi_profile(double delta, double r, double y, double alpha);

// Integral of phi over [lo, hi] (r <= lo < hi), with the (y-r)^{-alpha/2}
// edge handled by substitution when lo == r.
double phi_integral(double delta, double r, double lo, double hi, double alpha);

struct ThetaAuditReport {
    bool piece_identity_ok = false;   // branch (i): reciprocal inside, constant outside
    bool window_ok = false;           // K in (0, eps/4]
    bool c2_ok = false;               // one-sided value/deriv matches at breakpoints
    bool increasing_ok = false;       // strictly increasing on (T0, T2)
    bool max_second_deriv_ok = false; // grid max of theta'' attained at T0
    bool value_bound_ok = false;      // theta <= 4/q
    bool deriv_bound_ok = false;      // theta' <= 3/q^2
    double observed_c1 = 0.0;         // grid min of theta(v) ((r^2-v) v q)
    double observed_c2 = 0.0;         // grid max of same
    bool pass() const {
        return piece_identity_ok && window_ok && c2_ok && increasing_ok &&
               max_second_deriv_ok && value_bound_ok && deriv_bound_ok;
    }
};

ThetaAuditReport theta_class_audit(const PiecewiseTheta& theta, const BarrierParams& params,
                                   int grid_n = 10000);

}  // namespace recti
