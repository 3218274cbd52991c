#include "recti/levy_exact.hpp"

#include "recti/stable_math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace recti {

namespace {

// int_a^b v^{-1-alpha} dv for 0 < a <= b.
inline double kernel_mass(double a, double b, double alpha) {
    return (std::pow(a, -alpha) - std::pow(b, -alpha)) / alpha;
}

struct AxisRoots {
    double u;          // (a/|a|) . (y - z0)
    double a_norm;
    double lambda_sq;
    double v_minus(double R) const {
        return (-std::sqrt(std::max(0.0, R * R - lambda_sq)) - u) / a_norm;
    }
    double v_plus(double R) const {
        return (std::sqrt(std::max(0.0, R * R - lambda_sq)) - u) / a_norm;
    }
};

AxisRoots axis_roots(std::span<const double> y_rel, std::span<const double> col) {
    AxisRoots ar;
    ar.a_norm = norm(col);
    require(ar.a_norm > 0.0, "ring geometry: degenerate matrix column");
    ar.u = dot(col, y_rel) / ar.a_norm;
    ar.lambda_sq = std::max(0.0, norm_sq(y_rel) - ar.u * ar.u);
    return ar;
}

}  // namespace

RingRoots ring_roots(std::span<const double> y, std::span<const double> a,
                     std::span<const double> z0, double R) {
    require(y.size() == a.size() && y.size() == z0.size(), "ring_roots: dimension mismatch");
    Vec y_rel(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) y_rel[i] = y[i] - z0[i];
    require(norm_sq(y_rel) < R * R, "ring_roots: y must lie inside the sphere of radius R");
    const AxisRoots ar = axis_roots(y_rel, a);
    return RingRoots{ar.v_minus(R), ar.v_plus(R)};
}

RingPreimage ring_preimage(std::span<const double> y, const CoefficientField& field,
                           std::span<const double> z0, double R, double eta) {
    const int d = field.dim();
    Vec y_rel(d);
    for (int i = 0; i < d; ++i) y_rel[i] = y[i] - z0[i];
    require(norm_sq(y_rel) < R * R, "ring_preimage: y must lie inside the sphere of radius R");
    std::vector<double> mat(static_cast<std::size_t>(d) * d);
    field.matrix_at(y, mat);
    RingPreimage out;
    out.axes.reserve(d);
    for (int i = 0; i < d; ++i) {
        std::span<const double> col(mat.data() + static_cast<std::size_t>(i) * d,
                                    static_cast<std::size_t>(d));
        const AxisRoots ar = axis_roots(y_rel, col);
        AxisRingPreimage ax;
        ax.a_norm = ar.a_norm;
        ax.lambda_sq = ar.lambda_sq;
        ax.neg_lo = ar.v_minus(R + eta);
        ax.neg_hi = ar.v_minus(R);
        ax.pos_lo = ar.v_plus(R);
        ax.pos_hi = ar.v_plus(R + eta);
        out.axes.push_back(ax);
    }
    return out;
}

MuValue mu_ring_measure(std::span<const double> y, const CoefficientField& field,
                        std::span<const double> z0, double r, double R, double eta,
                        double alpha) {
    const int d = field.dim();
    Vec y_rel(d);
    for (int i = 0; i < d; ++i) y_rel[i] = y[i] - z0[i];
    const double ry = norm(y_rel);
    require(ry < R, "mu_ring_measure: y must lie inside the sphere of radius R");
    require(eta > 0.0 && R > 0.0, "mu_ring_measure: R and eta must be positive");
    const bool regime = ry < r && eta < r && r < 0.8 * R;

    std::vector<double> mat(static_cast<std::size_t>(d) * d);
    field.matrix_at(y, mat);
    double total = 0.0;
    for (int i = 0; i < d; ++i) {
        std::span<const double> col(mat.data() + static_cast<std::size_t>(i) * d,
                                    static_cast<std::size_t>(d));
        const AxisRoots ar = axis_roots(y_rel, col);
        total += kernel_mass(ar.v_plus(R), ar.v_plus(R + eta), alpha);
        total += kernel_mass(-ar.v_minus(R), -ar.v_minus(R + eta), alpha);
    }
    return MuValue{a_alpha(StabilityIndex(alpha)) * total, regime};
}

ExteriorMeasure mu_exterior_lower(std::span<const double> y, const CoefficientField& field,
                                  std::span<const double> z0, std::span<const double> x,
                                  double R, double alpha) {
    const int d = field.dim();
    Vec y_rel(d), x_rel(d);
    for (int i = 0; i < d; ++i) {
        y_rel[i] = y[i] - z0[i];
        x_rel[i] = x[i] - z0[i];
    }
    const double ry = norm(y_rel);
    const double rx = norm(x_rel);
    require(ry < R, "mu_exterior_lower: y must lie inside the sphere of radius R");
    require(rx < R, "mu_exterior_lower: x must lie inside the sphere of radius R");
    const bool regime = dist(y, x) <= (R - rx) / 3.0 + 1e-15;

    std::vector<double> mat(static_cast<std::size_t>(d) * d);
    field.matrix_at(y, mat);
    double total = 0.0;
    for (int i = 0; i < d; ++i) {
        std::span<const double> col(mat.data() + static_cast<std::size_t>(i) * d,
                                    static_cast<std::size_t>(d));
        const AxisRoots ar = axis_roots(y_rel, col);
        total += std::pow(ar.v_plus(R), -alpha) / alpha;
        total += std::pow(-ar.v_minus(R), -alpha) / alpha;
    }
    const double a_const = a_alpha(StabilityIndex(alpha));
    ExteriorMeasure out;
    out.exact = a_const * total;
    out.c_constant = a_const / alpha * std::pow(0.125, alpha) *
                     min_directional_sum(field, alpha, std::max(1.0, R), 64, 128);
    out.envelope = out.c_constant / std::pow(R - rx, alpha);
    out.within_regime = regime;
    return out;
}

double min_directional_sum(const CoefficientField& field, double alpha, double probe_box,
                           int n_probes, int n_directions) {
    const int d = field.dim();
    std::vector<double> mat(static_cast<std::size_t>(d) * d);
    Vec y(d), z(d);
    double min_sum = std::numeric_limits<double>::infinity();
    RandomStream rng(0x5ca1ab1eULL);  // deterministic probe set
    for (int p = 0; p < n_probes; ++p) {
        for (int i = 0; i < d; ++i) y[i] = probe_box * (2.0 * rng.uniform01() - 1.0);
        field.matrix_at(y, mat);
        for (int q = 0; q < n_directions; ++q) {
            // Gaussian-direction sampling via Box-Muller on the stream.
            double nz = 0.0;
            for (int i = 0; i < d; ++i) {
                const double u1 = rng.uniform_open(), u2 = rng.uniform01();
                z[i] = std::sqrt(-2.0 * std::log(u1)) *
                       std::cos(6.283185307179586 * u2);
                nz += z[i] * z[i];
            }
            nz = std::sqrt(nz);
            if (nz == 0.0) continue;
            double s = 0.0;
            for (int i = 0; i < d; ++i) {
                double proj = 0.0;
                for (int j = 0; j < d; ++j)
                    proj += mat[static_cast<std::size_t>(i) * d + j] * z[j] / nz;
                s += std::pow(std::abs(proj), alpha);
            }
            min_sum = std::min(min_sum, s);
        }
    }
    return min_sum;
}

double nu_radial_set_with_matrix(std::span<const double> y_rel,
                                 std::span<const double> matrix_colmajor, int dim,
                                 const RadialSet& set, double alpha) {
    double total = 0.0;
    for (int i = 0; i < dim; ++i) {
        std::span<const double> col(matrix_colmajor.data() + static_cast<std::size_t>(i) * dim,
                                    static_cast<std::size_t>(dim));
        const AxisRoots ar = axis_roots(y_rel, col);
        if (set.kind == RadialSetKind::ring) {
            total += kernel_mass(ar.v_plus(set.R), ar.v_plus(set.R + set.eta), alpha);
            total += kernel_mass(-ar.v_minus(set.R), -ar.v_minus(set.R + set.eta), alpha);
        } else {
            total += std::pow(ar.v_plus(set.R), -alpha) / alpha;
            total += std::pow(-ar.v_minus(set.R), -alpha) / alpha;
        }
    }
    return a_alpha(StabilityIndex(alpha)) * total;
}

double nu_radial_set(std::span<const double> y, const CoefficientField& field,
                     std::span<const double> z0, const RadialSet& set, double alpha) {
    const int d = field.dim();
    Vec y_rel(d);
    for (int i = 0; i < d; ++i) y_rel[i] = y[i] - z0[i];
    require(norm_sq(y_rel) < set.R * set.R,
            "nu_radial_set: y must lie inside the sphere of radius R");
    std::vector<double> mat(static_cast<std::size_t>(d) * d);
    field.matrix_at(y, mat);
    return nu_radial_set_with_matrix(y_rel, mat, d, set, alpha);
}

McEstimate mu_ring_measure_mc(std::span<const double> y, const CoefficientField& field,
                              std::span<const double> z0, double r, double R, double eta,
                              double alpha, long n_samples, RandomStream& rng) {
    const int d = field.dim();
    Vec y_rel(d);
    for (int i = 0; i < d; ++i) y_rel[i] = y[i] - z0[i];
    const double ry = norm(y_rel);
    require(ry < R, "mu_ring_measure_mc: y must lie inside the sphere of radius R");
    (void)r;

    std::vector<double> mat(static_cast<std::size_t>(d) * d);
    field.matrix_at(y, mat);

    // Sampling windows per axis: |v| in [w_lo_i, w_hi_i] covers the ring
    // preimage with slack; mass of each window under A_a |v|^{-1-a} dv.
    std::vector<double> w_lo(d), w_hi(d), mass(d);
    double total_mass = 0.0;
    const double a_const = a_alpha(StabilityIndex(alpha));
    for (int i = 0; i < d; ++i) {
        double an = 0.0;
        for (int j = 0; j < d; ++j) {
            const double e = mat[static_cast<std::size_t>(i) * d + j];
            an += e * e;
        }
        an = std::sqrt(an);
        w_lo[i] = 0.5 * (R - ry) / an;
        w_hi[i] = 2.0 * (R + eta + ry) / an;
        mass[i] = 2.0 * a_const * kernel_mass(w_lo[i], w_hi[i], alpha);
        total_mass += mass[i];
    }

    Vec img(d);
    long hits = 0;
    for (long s = 0; s < n_samples; ++s) {
        // Pick the axis proportional to window mass.
        double pick = rng.uniform01() * total_mass;
        int axis = 0;
        while (axis + 1 < d && pick > mass[axis]) {
            pick -= mass[axis];
            ++axis;
        }
        // Inverse CDF of v^{-1-alpha} restricted to [w_lo, w_hi], random sign.
        const double u = rng.uniform_open();
        const double lo_p = std::pow(w_lo[axis], -alpha);
        const double hi_p = std::pow(w_hi[axis], -alpha);
        const double v_abs = std::pow(lo_p - u * (lo_p - hi_p), -1.0 / alpha);
        const double v = rng.uniform01() < 0.5 ? v_abs : -v_abs;
        double rho2 = 0.0;
        for (int j = 0; j < d; ++j) {
            img[j] = y_rel[j] + mat[static_cast<std::size_t>(axis) * d + j] * v;
            rho2 += img[j] * img[j];
        }
        const double lo_r = R, hi_r = R + eta;
        if (rho2 >= lo_r * lo_r && rho2 <= hi_r * hi_r) ++hits;
    }
    const double p = static_cast<double>(hits) / n_samples;
    McEstimate est;
    est.value = total_mass * p;
    est.se = total_mass * std::sqrt(std::max(p * (1.0 - p), 1e-300) / n_samples);
    return est;
}

}  // namespace recti
