#pragma once

#include "recti/common.hpp"
#include "recti/rng.hpp"

#include <functional>
#include <string>
#include <vector>

namespace recti {

struct Ball {
    Vec center;
    double radius;

    Ball(Vec c, double r) : center(std::move(c)), radius(r) {
        require(radius > 0.0, "Ball: radius must be positive");
        require(center.size() >= 2, "Ball: dimension must be at least 2");
    }
    int dim() const { return static_cast<int>(center.size()); }
    bool contains(std::span<const double> x) const {
        return dist_sq(x, center) < radius * radius;
    }
    double boundary_distance(std::span<const double> x) const {
        return radius - dist(x, center);
    }
};

// The matrix map x -> A(x) with its ellipticity certificates:
// |a_ij(x)| <= eta1 and det A(x) >= eta2 for all x. The certificates are
// supplied by the construction and probed by audit_field.
class CoefficientField {
public:
    // Writes the d x d matrix column-major into `out` (size d*d),
    // column i at out[i*d .. i*d+d).
    using MatrixFn = std::function<void(std::span<const double> x, std::span<double> out)>;

    CoefficientField(std::string name, int dim, MatrixFn fn, double eta1, double eta2,
                     bool is_identity = false)
        : name_(std::move(name)), dim_(dim), fn_(std::move(fn)), eta1_(eta1), eta2_(eta2),
          is_identity_(is_identity) {
        require(dim_ >= 2, "CoefficientField: dimension must be at least 2");
        require(eta1_ > 0.0 && eta2_ > 0.0, "CoefficientField: eta bounds must be positive");
    }

    void matrix_at(std::span<const double> x, std::span<double> out) const { fn_(x, out); }
    void column_at(std::span<const double> x, int i, std::span<double> col) const;

    const std::string& name() const { return name_; }
    int dim() const { return dim_; }
    double eta1() const { return eta1_; }
    double eta2() const { return eta2_; }
    bool is_identity() const { return is_identity_; }

private:
    std::string name_;
    int dim_;
    MatrixFn fn_;
    double eta1_;
    double eta2_;
    bool is_identity_;
};

// identity, diag2 (diag(2,1,...,1)), rotscale (plane rotation times a smooth
// scale in [1/2, 2]).
std::vector<CoefficientField> builtin_fields(int dim);
CoefficientField builtin_field(const std::string& name, int dim);

double det(std::span<const double> matrix_colmajor, int dim);

struct FieldAuditReport {
    bool entry_bound_ok = false;
    bool det_bound_ok = false;
    bool continuity_ok = false;
    double max_abs_entry = 0.0;
    double min_det = 0.0;
    double worst_modulus = 0.0;  // |A(x)-A(y)|_max at the finest probe separation
    bool pass() const { return entry_bound_ok && det_bound_ok && continuity_ok; }
};

// Probes eta1/eta2/continuity on random points in a box of half-width
// `box_half_width` about the origin.
FieldAuditReport audit_field(const CoefficientField& field, double box_half_width,
                             int n_probes, RandomStream& rng);

// Chord values of the section geometry used by the ring computations: the
// distances, along e_d through x (after reflecting to x_d >= 0), at which the
// spheres of radius r-eps, r, r+eps, r+eps+eta (and the three intermediate
// split radii) are crossed.
struct ChordGeometry {
    double S1, Sstar, Sdstar, Stristar, S2, S3, S4;
    double q;             // r^2 - (r-eps)^2
    double delta;         // r - |x|
    double xd;            // reflected coordinate, >= 0
    double x_tilde_norm;  // |x - x_d e_d|
};

// Default choice of the shell split parameter N: max(4, r (r v 1)^2 / eps).
double default_shell_split(double r, double eps);

ChordGeometry chord_geometry(std::span<const double> x_rel, double r, double eps,
                             double eta_ring, double N);

inline ChordGeometry chord_geometry(std::span<const double> x_rel, double r, double eps,
                                    double eta_ring) {
    return chord_geometry(x_rel, r, eps, eta_ring, default_shell_split(r, eps));
}

}  // namespace recti
