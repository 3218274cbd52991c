#pragma once

#include "recti/barrier_lib.hpp"
#include "recti/common.hpp"
#include "recti/geometry_fields.hpp"
#include "recti/stable_math.hpp"

#include <functional>
#include <iosfwd>
#include <limits>
#include <vector>

namespace recti {

// Evaluation policy for the singular directional integrals.
struct QuadratureSpec {
    double abs_tol = 1e-10;
    double rel_tol = 1e-9;
    int max_subdivisions = 20000;
    // Inner radius policy: below core_floor times the first structure
    // crossing, the symmetric second difference is replaced by its leading
    // quadratic term integrated in closed form.
    double core_floor = 1e-4;
    // Substitution exponent mu for integrable endpoint behaviour at support
    // crossings (u = dist^mu). 0 selects alpha/2, which flattens both the
    // dist^{alpha/2-1} blowup and the dist^{alpha/2} kink.
    double edge_sub_exponent = 0.0;
    // Tail policy for non-compact fields: integrate out to tail_cutoff times
    // the outermost knot through a 1/w mapping.
    double tail_cutoff = 1e8;
};

struct GeneratorValue {
    double value = 0.0;
    double error_estimate = 0.0;
    int subdivisions_used = 0;
    bool converged = true;
};

enum class KnotKind { smooth, jump, edge };

struct SphereFeature {
    double radius;
    KnotKind kind;
};

// A scalar field on d-space together with the radial structure the
// quadrature needs: spheres about `center` where the field has reduced
// smoothness, and the support radius when the field vanishes far away.
//
// Fields built from the power factor (R^2 - |y-c|^2)^p additionally expose
// that decomposition: inside B(c, edge_radius),
//   f(y) = (edge_radius^2 - |y-c|^2)^{edge_power} * rest(y),
// with `rest` bounded near the sphere (null means rest == 1). The quadrature
// then evaluates the vanishing factor from exact distances along the
// integration line instead of by subtraction of squared norms, which keeps
// full precision inside the singular edge layer.
struct ScalarField {
    std::function<double(std::span<const double>)> eval;
    Vec center;
    std::vector<SphereFeature> features;
    double support_radius = std::numeric_limits<double>::infinity();

    bool has_edge_factor = false;
    double edge_power = 0.0;
    double edge_radius = 0.0;
    std::function<double(std::span<const double>)> rest_eval;  // null: rest == 1

    bool compact() const { return std::isfinite(support_radius); }
};

ScalarField make_lambda_field(const Ball& ball, double alpha);
ScalarField make_h_field(const Ball& ball, double alpha);
ScalarField make_f_theta_field(const Ball& ball, const PiecewiseTheta& theta, double alpha);
ScalarField make_big_f_theta_field(const Ball& ball, double eps, double alpha);
ScalarField make_g_field(const Ball& ball, double eps, double eta_ring);
ScalarField make_f_b_theta_field(const Ball& ball, const BarrierParams& params,
                                 const PiecewiseTheta& theta, double alpha);
ScalarField make_big_f_b_theta_field(const Ball& ball, const BarrierParams& params, double alpha);
ScalarField linear_combination(double ca, const ScalarField& fa, double cb,
                               const ScalarField& fb);

// L_v f(x) = (A_alpha/2) \int [f(x+vw) + f(x-vw) - 2 f(x)] |w|^{-1-alpha} dw,
// evaluated by knot-split adaptive Gauss-Kronrod with substitution at
// support-edge crossings and exact constant tails for compact fields.
GeneratorValue pv_directional(const ScalarField& f, std::span<const double> x,
                              std::span<const double> v, double alpha,
                              const QuadratureSpec& spec);

// |v|^alpha L_{v/|v|} f(x); for radial f this must agree with the direct
// evaluation along v.
GeneratorValue scaling_reduce(const ScalarField& f, std::span<const double> x,
                              std::span<const double> v, double alpha,
                              const QuadratureSpec& spec);

// Full generator: sum of L_{a_i(x)} f(x) over the columns of A(x).
GeneratorValue full_generator(const ScalarField& f, std::span<const double> x,
                              const CoefficientField& field, double alpha,
                              const QuadratureSpec& spec);

// Closed form of L_{e_d} applied to the ring indicator:
// (A_alpha/alpha) [(S3-xd)^{-a} - (S4-xd)^{-a} + (S3+xd)^{-a} - (S4+xd)^{-a}].
double Lg_closed_form(std::span<const double> x_rel, const Ball& ball, double eps,
                      double eta_ring, double alpha);

struct SignAuditPoint {
    Vec x;
    double radius = 0.0;
    int region = 0;  // 1: |x| < r-eps, 2: [r-eps, r-eps+eps/N], 3: beyond
    double barrier_term = 0.0;    // L_{e_d} of f_theta or F_Theta
    double barrier_err = 0.0;
    double ring_term = 0.0;       // (eps^{a/2} / (eta r^{1-a/2})) L_{e_d} g
    double required_b = 0.0;      // pointwise feasibility bound for b
    double margin = 0.0;          // slack at the reported b
};

struct SignAuditReport {
    bool found = false;
    bool super = true;            // direction of the inequality
    double b = 0.0;
    int ladder_exponent = 0;
    double alpha = 0.0;
    double worst_margin = 0.0;
    std::vector<SignAuditPoint> points;
    void write_csv(std::ostream& os) const;
    std::string to_json() const;
};

// Interior grid spread over the three radial regions of the case analysis,
// avoiding the boundary sphere by margin_frac * r.
std::vector<Vec> make_audit_grid(const Ball& ball, double eps, double N, int n_points,
                                 double margin_frac, int dim);

// Smallest b = 2^k with b L_{e_d} f_theta(x) <= -(ring term) + tol*scale on
// the whole grid.
SignAuditReport sign_audit_super(const PiecewiseTheta& theta, const BarrierParams& params,
                                 const Ball& ball, double alpha,
                                 const std::vector<Vec>& grid, const QuadratureSpec& spec,
                                 double tolerance = 1e-6, int ladder_cap = 20);

// Largest b = 2^k with b L_{e_d} F_Theta(x) >= (ring term) - tol*scale.
SignAuditReport sign_audit_sub(const BarrierParams& params, const Ball& ball, double alpha,
                               const std::vector<Vec>& grid, const QuadratureSpec& spec,
                               double tolerance = 1e-6, int ladder_cap = 20);

}  // namespace recti
