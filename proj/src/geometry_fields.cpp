#include "recti/geometry_fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace recti {

void CoefficientField::column_at(std::span<const double> x, int i,
                                 std::span<double> col) const {
    std::vector<double> buf(static_cast<std::size_t>(dim_) * dim_);
    fn_(x, buf);
    for (int j = 0; j < dim_; ++j) col[j] = buf[static_cast<std::size_t>(i) * dim_ + j];
}

double det(std::span<const double> matrix_colmajor, int dim) {
    // Gaussian elimination with partial pivoting; d is small here.
    std::vector<double> m(matrix_colmajor.begin(), matrix_colmajor.end());
    auto at = [&](int row, int col) -> double& {
        return m[static_cast<std::size_t>(col) * dim + row];
    };
    double d = 1.0;
    for (int k = 0; k < dim; ++k) {
        int piv = k;
        for (int r = k + 1; r < dim; ++r)
            if (std::abs(at(r, k)) > std::abs(at(piv, k))) piv = r;
        if (at(piv, k) == 0.0) return 0.0;
        if (piv != k) {
            for (int c = 0; c < dim; ++c) std::swap(at(piv, c), at(k, c));
            d = -d;
        }
        d *= at(k, k);
        for (int r = k + 1; r < dim; ++r) {
            const double f = at(r, k) / at(k, k);
            for (int c = k; c < dim; ++c) at(r, c) -= f * at(k, c);
        }
    }
    return d;
}

CoefficientField builtin_field(const std::string& name, int dim) {
    const std::size_t d = static_cast<std::size_t>(dim);
    if (name == "identity") {
        auto fn = [d](std::span<const double>, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
            for (std::size_t i = 0; i < d; ++i) out[i * d + i] = 1.0;
        };
        return CoefficientField("identity", dim, fn, 1.0, 1.0, /*is_identity=*/true);
    }
    if (name == "diag2") {
        auto fn = [d](std::span<const double>, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
            out[0] = 2.0;
            for (std::size_t i = 1; i < d; ++i) out[i * d + i] = 1.0;
        };
        return CoefficientField("diag2", dim, fn, 2.0, 2.0);
    }
    if (name == "rotscale") {
        // Rotation in the (e1,e2) plane by a smooth position-dependent angle,
        // scaled by s(x) = 1.25 + 0.75 sin(x1+x2) in [1/2, 2].
        // det = s^d >= 2^{-d}, entries bounded by s <= 2.
        auto fn = [d](std::span<const double> x, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
            const double omega = std::sin(x[0]) * std::cos(x[1]);
            const double s = 1.25 + 0.75 * std::sin(x[0] + x[1]);
            const double c = std::cos(omega), sn = std::sin(omega);
            out[0 * d + 0] = s * c;
            out[0 * d + 1] = s * sn;
            out[1 * d + 0] = -s * sn;
            out[1 * d + 1] = s * c;
            for (std::size_t i = 2; i < d; ++i) out[i * d + i] = s;
        };
        return CoefficientField("rotscale", dim, fn, 2.0, std::pow(2.0, -dim));
    }
    throw std::invalid_argument("builtin_field: unknown field '" + name + "'");
}

std::vector<CoefficientField> builtin_fields(int dim) {
    std::vector<CoefficientField> out;
    out.push_back(builtin_field("identity", dim));
    out.push_back(builtin_field("diag2", dim));
    out.push_back(builtin_field("rotscale", dim));
    return out;
}

FieldAuditReport audit_field(const CoefficientField& field, double box_half_width,
                             int n_probes, RandomStream& rng) {
    const int d = field.dim();
    const std::size_t dd = static_cast<std::size_t>(d) * d;
    std::vector<double> x(d), y(d), ax(dd), ay(dd);
    FieldAuditReport rep;
    rep.min_det = std::numeric_limits<double>::infinity();
    for (int p = 0; p < n_probes; ++p) {
        for (int i = 0; i < d; ++i) x[i] = box_half_width * (2.0 * rng.uniform01() - 1.0);
        field.matrix_at(x, ax);
        for (double e : ax) rep.max_abs_entry = std::max(rep.max_abs_entry, std::abs(e));
        rep.min_det = std::min(rep.min_det, det(ax, d));
        // Modulus-of-continuity probe: |A(x)-A(y)| at separation 1e-8 * width.
        const double sep = 1e-8 * box_half_width / std::sqrt(double(d));
        for (int i = 0; i < d; ++i) y[i] = x[i] + sep;
        field.matrix_at(y, ay);
        double diff = 0.0;
        for (std::size_t e = 0; e < dd; ++e) diff = std::max(diff, std::abs(ax[e] - ay[e]));
        rep.worst_modulus = std::max(rep.worst_modulus, diff);
    }
    const double slack = 1e-12;
    rep.entry_bound_ok = rep.max_abs_entry <= field.eta1() + slack;
    rep.det_bound_ok = rep.min_det >= field.eta2() - slack;
    rep.continuity_ok = rep.worst_modulus <= 1e-5 * std::max(1.0, field.eta1());
    return rep;
}

double default_shell_split(double r, double eps) {
    const double rv = std::max(r, 1.0);
    return std::max(4.0, r * rv * rv / eps);
}

ChordGeometry chord_geometry(std::span<const double> x_rel, double r, double eps,
                             double eta_ring, double N) {
    require(r > 0.0, "chord_geometry: r must be positive");
    require(eps > 0.0 && eps <= r / 4.0, "chord_geometry: eps must lie in (0, r/4]");
    require(eta_ring > 0.0 && eta_ring <= eps, "chord_geometry: eta_ring must lie in (0, eps]");
    require(N >= 4.0, "chord_geometry: N must be at least 4");
    const double xx = norm_sq(x_rel);
    require(xx < r * r, "chord_geometry: point must lie in the open ball");

    const std::size_t d = x_rel.size();
    const double xd = std::abs(x_rel[d - 1]);  // reflected so x_d >= 0
    const double xt_sq = std::max(0.0, xx - xd * xd);

    auto chord = [xt_sq](double radius) {
        return std::sqrt(std::max(0.0, radius * radius - xt_sq));
    };

    ChordGeometry g;
    g.xd = xd;
    g.x_tilde_norm = std::sqrt(xt_sq);
    g.q = r * r - (r - eps) * (r - eps);
    g.delta = r - std::sqrt(xx);
    g.S1 = chord(r - eps);
    g.Sstar = chord(r - eps + eps / N);
    g.Sdstar = chord(r - 0.75 * eps);
    g.Stristar = chord(r - 0.5 * eps);
    g.S2 = chord(r);
    g.S3 = chord(r + eps);
    g.S4 = chord(r + eps + eta_ring);
    return g;
}

}  // namespace recti
