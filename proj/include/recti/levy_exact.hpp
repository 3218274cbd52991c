#pragma once

#include "recti/common.hpp"
#include "recti/geometry_fields.hpp"
#include "recti/rng.hpp"

#include <optional>
#include <vector>

namespace recti {

// Signed roots of |y - z0 + a v| = R in v: v- < 0 < v+ when |y - z0| < R.
struct RingRoots {
    double v_minus;
    double v_plus;
};

RingRoots ring_roots(std::span<const double> y, std::span<const double> a,
                     std::span<const double> z0, double R);

// Per-column preimage of the ring {R <= |y - z0 + A(y) v e_i| <= R + eta}:
// the two intervals [v-(R+eta), v-(R)] and [v+(R), v+(R+eta)].
struct AxisRingPreimage {
    double a_norm;
    double lambda_sq;  // |y-z0|^2 - ((a/|a|).(y-z0))^2
    double neg_lo, neg_hi;
    double pos_lo, pos_hi;
};

struct RingPreimage {
    std::vector<AxisRingPreimage> axes;
};

RingPreimage ring_preimage(std::span<const double> y, const CoefficientField& field,
                           std::span<const double> z0, double R, double eta);

// Exact mu-measure of the ring preimage, A_alpha sum_i int_{P_i} |v|^{-1-a} dv
// by the closed-form antiderivative. `within_regime` reports whether the
// hypotheses of the two-sided comparison (0 < eta < r < (4/5) R and
// |y-z0| < r) held; out-of-regime calls still return the exact integral
// (relaxed mode).
struct MuValue {
    double value;
    bool within_regime;
};

MuValue mu_ring_measure(std::span<const double> y, const CoefficientField& field,
                        std::span<const double> z0, double r, double R, double eta,
                        double alpha);

// Exact mu-measure of {v : |y - z0 + A(y) v| >= R} plus the lower-bound
// envelope c / (R - |x - z0|)^alpha, with c estimated from the directional
// minimum of the field.
struct ExteriorMeasure {
    double exact;
    double envelope;
    double c_constant;
    bool within_regime;
};

ExteriorMeasure mu_exterior_lower(std::span<const double> y, const CoefficientField& field,
                                  std::span<const double> z0, std::span<const double> x,
                                  double R, double alpha);

// min over probe points y and unit directions z of sum_i |a_i(y) . z|^alpha,
// estimated on a deterministic sphere grid; feeds the c constant above.
double min_directional_sum(const CoefficientField& field, double alpha, double probe_box,
                           int n_probes, int n_directions);

enum class RadialSetKind { ring, exterior };

struct RadialSet {
    RadialSetKind kind;
    double R;
    double eta;  // ring width; ignored for exterior
};

// nu(y, U) = mu({v : y + A(y) v in U}) for radial U about z0.
double nu_radial_set(std::span<const double> y, const CoefficientField& field,
                     std::span<const double> z0, const RadialSet& set, double alpha);

// Fast-path variant with the matrix already evaluated (column-major).
double nu_radial_set_with_matrix(std::span<const double> y_rel,
                                 std::span<const double> matrix_colmajor, int dim,
                                 const RadialSet& set, double alpha);

// Monte Carlo cross-check of mu_ring_measure: samples the restricted axis
// measure by inverse CDF and tests ring membership; returns (estimate, se).
struct McEstimate {
    double value;
    double se;
};
McEstimate mu_ring_measure_mc(std::span<const double> y, const CoefficientField& field,
                              std::span<const double> z0, double r, double R, double eta,
                              double alpha, long n_samples, RandomStream& rng);

}  // namespace recti
