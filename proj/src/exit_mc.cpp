#include "recti/exit_mc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <thread>

namespace recti {

namespace {

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Per-path worker shared by the plain simulator and the green-integral
// runner. Runs paths [begin, end) and writes records by path index.
struct PathRunner {
    const Vec& x0;
    const Ball& ball;
    const CoefficientField& field;
    double alpha;
    const SimulationSpec& spec;
    const RadialSet* green_set = nullptr;

    std::vector<ExitRecord>* records;
    std::vector<Vec>* positions;
    std::vector<double>* green_sums;
    long* censored_count;  // per-worker slot

    void run(long begin, long end) const {
        const int d = ball.dim();
        const StabilityIndex idx(alpha);
        const double dt_scale = std::pow(spec.time_step, 1.0 / alpha);
        const double r2 = ball.radius * ball.radius;
        const bool identity = field.is_identity();
        std::vector<double> x(d), dz(d), mat(static_cast<std::size_t>(d) * d), rel(d);
        if (identity) {
            std::fill(mat.begin(), mat.end(), 0.0);
            for (int i = 0; i < d; ++i) mat[static_cast<std::size_t>(i) * d + i] = 1.0;
        }
        long censored = 0;
        for (long p = begin; p < end; ++p) {
            RandomStream rng = RandomStream::substream(spec.master_seed, (std::uint64_t)p);
            for (int i = 0; i < d; ++i) x[i] = x0[i];
            double green_acc = 0.0;
            long n = 0;
            bool exited = false;
            double rho2 = 0.0;
            while (n < spec.max_steps) {
                if (!identity) field.matrix_at(x, mat);
                if (green_set) {
                    for (int i = 0; i < d; ++i) rel[i] = x[i] - ball.center[i];
                    green_acc += nu_radial_set_with_matrix(rel, mat, d, *green_set, alpha) *
                                 spec.time_step;
                }
                for (int i = 0; i < d; ++i)
                    dz[i] = dt_scale * sample_standard_stable(idx, rng);
                if (identity) {
                    for (int i = 0; i < d; ++i) x[i] += dz[i];
                } else {
                    for (int i = 0; i < d; ++i) {
                        const double inc = dz[i];
                        const double* col = mat.data() + static_cast<std::size_t>(i) * d;
                        for (int j = 0; j < d; ++j) x[j] += col[j] * inc;
                    }
                }
                ++n;
                rho2 = 0.0;
                for (int i = 0; i < d; ++i) {
                    const double t = x[i] - ball.center[i];
                    rho2 += t * t;
                }
                if (rho2 >= r2) {
                    exited = true;
                    break;
                }
            }
            auto& rec = (*records)[p];
            if (exited) {
                rec.exit_time = static_cast<double>(n) * spec.time_step;
                rec.exit_radius = std::sqrt(rho2);
                rec.steps = n;
            } else {
                rec.exit_time = -1.0;
                rec.exit_radius = -1.0;
                rec.steps = n;
                ++censored;
            }
            if (positions) (*positions)[p].assign(x.begin(), x.end());
            if (green_sums) (*green_sums)[p] = green_acc;
        }
        *censored_count += censored;
    }
};

ExitEnsemble run_paths(const Vec& x0, const Ball& ball, const CoefficientField& field,
                       StabilityIndex alpha, const SimulationSpec& spec,
                       const RadialSet* green_set) {
    spec.validate();
    require(static_cast<int>(x0.size()) == ball.dim(), "simulate_exit: dimension mismatch");
    require(ball.contains(x0), "simulate_exit: start point must lie in the open ball");

    ExitEnsemble ens{x0, ball, {}, 0, {}, {}};
    ens.records.resize(spec.paths);
    if (spec.store_positions) ens.exit_positions.resize(spec.paths);
    if (green_set) ens.green_path_sums.resize(spec.paths);

    const int n_threads = std::min<long>(resolve_threads(spec.threads), spec.paths);
    std::vector<long> censored(n_threads, 0);
    std::vector<std::thread> workers;
    const long chunk = (spec.paths + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
        const long begin = t * chunk;
        const long end = std::min<long>(spec.paths, begin + chunk);
        if (begin >= end) break;
        PathRunner runner{x0,
                          ball,
                          field,
                          alpha.value(),
                          spec,
                          green_set,
                          &ens.records,
                          spec.store_positions ? &ens.exit_positions : nullptr,
                          green_set ? &ens.green_path_sums : nullptr,
                          &censored[t]};
        workers.emplace_back([runner, begin, end] { runner.run(begin, end); });
    }
    for (auto& w : workers) w.join();
    for (long c : censored) ens.censored += c;

    const double frac = static_cast<double>(ens.censored) / static_cast<double>(spec.paths);
    if (frac > spec.censor_threshold) {
        std::ostringstream msg;
        msg << "simulate_exit: censored fraction " << frac << " exceeds threshold "
            << spec.censor_threshold << " (censored " << ens.censored << " of " << spec.paths
            << " paths, max_steps " << spec.max_steps << ", time_step " << spec.time_step
            << "); increase max_steps";
        throw CensoringError(msg.str());
    }
    return ens;
}

}  // namespace

ExitEnsemble simulate_exit(const Vec& x0, const Ball& ball, const CoefficientField& field,
                           StabilityIndex alpha, const SimulationSpec& spec) {
    return run_paths(x0, ball, field, alpha, spec, nullptr);
}

MeanCI estimate_exit_time_mean(const ExitEnsemble& ensemble) {
    MeanCI out;
    double sum = 0.0, sum_sq = 0.0;
    long n = 0;
    for (const auto& rec : ensemble.records) {
        if (rec.exit_time < 0.0) continue;
        sum += rec.exit_time;
        sum_sq += rec.exit_time * rec.exit_time;
        ++n;
    }
    require(n > 1, "estimate_exit_time_mean: need at least two uncensored paths");
    out.n = n;
    out.mean = sum / n;
    const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
    out.se = std::sqrt(var / n);
    out.lo = out.mean - 1.96 * out.se;
    out.hi = out.mean + 1.96 * out.se;
    return out;
}

std::vector<MeanCI> step_halving_study(const Vec& x0, const Ball& ball,
                                       const CoefficientField& field, StabilityIndex alpha,
                                       const SimulationSpec& spec) {
    std::vector<MeanCI> out;
    SimulationSpec level = spec;
    for (int k = 0; k <= spec.step_halving_levels; ++k) {
        level.master_seed = spec.master_seed + 0x9E3779B9ULL * (k + 1);
        out.push_back(estimate_exit_time_mean(simulate_exit(x0, ball, field, alpha, level)));
        level.time_step *= 0.5;
    }
    return out;
}

double near_sphere_mass(const ExitEnsemble& ensemble, double kappa) {
    const double r = ensemble.ball.radius;
    long hits = 0, n = 0;
    for (const auto& rec : ensemble.records) {
        if (rec.exit_radius < 0.0) continue;
        ++n;
        if (rec.exit_radius <= r + kappa) ++hits;
    }
    return n == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(n);
}

RadialHistogram estimate_exit_density(const ExitEnsemble& ensemble,
                                      const BinningSpec& binning) {
    const double r = ensemble.ball.radius;
    RadialHistogram h;
    h.edges.push_back(r);
    // Log-refined edge bins on (r, (1+span) r].
    for (int i = 1; i <= binning.edge_bins; ++i) {
        const double t = static_cast<double>(binning.edge_bins - i) /
                         static_cast<double>(binning.edge_bins);
        const double xi = binning.edge_span * std::pow(binning.xi_min / binning.edge_span, t);
        h.edges.push_back(r * (1.0 + xi));
    }
    // Geometric bins out to far_limit * r.
    double e = r * (1.0 + binning.edge_span);
    while (e * binning.geo_ratio < binning.far_limit * r * (1.0 - 1e-12)) {
        e *= binning.geo_ratio;
        h.edges.push_back(e);
    }
    h.edges.push_back(binning.far_limit * r);

    h.counts.assign(h.edges.size() - 1, 0);
    for (const auto& rec : ensemble.records) {
        if (rec.exit_radius < 0.0) continue;
        ++h.total;
        if (rec.exit_radius > h.edges.back()) {
            ++h.overflow;
            continue;
        }
        const auto it = std::upper_bound(h.edges.begin(), h.edges.end(), rec.exit_radius);
        std::size_t bin =
            it == h.edges.begin() ? 0 : static_cast<std::size_t>(it - h.edges.begin()) - 1;
        if (bin >= h.counts.size()) bin = h.counts.size() - 1;
        ++h.counts[bin];
    }
    h.density.resize(h.counts.size());
    h.density_se.resize(h.counts.size());
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        const double width = h.edges[i + 1] - h.edges[i];
        const double p = static_cast<double>(h.counts[i]) / static_cast<double>(h.total);
        h.density[i] = p / width;
        h.density_se[i] = std::sqrt(std::max(p * (1.0 - p), 0.0) / h.total) / width;
    }
    return h;
}

void RadialHistogram::write_csv(std::ostream& os) const {
    os << "bin_lo,bin_hi,count,density,density_se\n";
    char buf[256];
    for (std::size_t i = 0; i < counts.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%ld,%.17g,%.17g\n", edges[i], edges[i + 1],
                      counts[i], density[i], density_se[i]);
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g,inf,%ld,,\n", edges.back(), overflow);
    os << buf;
}

GreenCheck estimate_green_integral(const Vec& x0, const Ball& ball,
                                   const CoefficientField& field, StabilityIndex alpha,
                                   const SimulationSpec& spec, const RadialSet& V) {
    require(V.R >= ball.radius * (1.0 + 1e-12),
            "estimate_green_integral: V must be separated from the ball");
    ExitEnsemble ens = run_paths(x0, ball, field, alpha, spec, &V);

    long n = 0, hits = 0;
    double rhs_sum = 0.0, rhs_sq = 0.0;
    for (std::size_t p = 0; p < ens.records.size(); ++p) {
        const auto& rec = ens.records[p];
        if (rec.exit_time < 0.0) continue;
        ++n;
        const double rho = rec.exit_radius;
        const bool in_v = V.kind == RadialSetKind::ring
                              ? (rho >= V.R && rho <= V.R + V.eta)
                              : (rho >= V.R);
        if (in_v) ++hits;
        const double s = ens.green_path_sums[p];
        rhs_sum += s;
        rhs_sq += s * s;
    }
    GreenCheck out;
    const double p_hat = static_cast<double>(hits) / n;
    out.lhs = p_hat;
    out.lhs_se = std::sqrt(std::max(p_hat * (1.0 - p_hat), 0.0) / n);
    out.rhs = rhs_sum / n;
    const double var = std::max(0.0, (rhs_sq - rhs_sum * rhs_sum / n) / (n - 1.0));
    out.rhs_se = std::sqrt(var / n);
    return out;
}

MeanCI harmonic_eval(const Vec& x0, const Ball& ball, const CoefficientField& field,
                     StabilityIndex alpha, const SimulationSpec& spec,
                     const std::function<double(double)>& g_radial) {
    ExitEnsemble ens = simulate_exit(x0, ball, field, alpha, spec);
    MeanCI out;
    double sum = 0.0, sum_sq = 0.0;
    long n = 0;
    for (const auto& rec : ens.records) {
        if (rec.exit_time < 0.0) continue;
        const double v = g_radial(rec.exit_radius);
        sum += v;
        sum_sq += v * v;
        ++n;
    }
    out.n = n;
    out.mean = sum / n;
    const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
    out.se = std::sqrt(var / n);
    out.lo = out.mean - 1.96 * out.se;
    out.hi = out.mean + 1.96 * out.se;
    return out;
}

SandwichReport barrier_sandwich_check(const std::vector<Vec>& xs, const Ball& ball,
                                      const CoefficientField& field, StabilityIndex alpha,
                                      const SimulationSpec& spec, const BarrierParams& params,
                                      const PiecewiseTheta& theta, double b1, double b2) {
    SandwichReport rep;
    const double r = ball.radius;
    const double lo_edge = r + params.eps, hi_edge = r + params.eps + params.eta_ring;
    auto ring_data = [lo_edge, hi_edge](double rho) {
        return (rho > lo_edge && rho < hi_edge) ? 1.0 : 0.0;
    };
    for (const auto& x : xs) {
        SandwichRow row;
        row.x = x;
        BarrierParams p1 = params;
        p1.b = b1;
        BarrierParams p2 = params;
        p2.b = b2;
        row.upper = f_b_theta_eval(x, p1, theta, ball, alpha.value());
        row.lower = F_b_Theta_eval(x, p2, ball, alpha.value());
        const MeanCI u = harmonic_eval(x, ball, field, alpha, spec, ring_data);
        row.u_hat = u.mean;
        row.u_se = u.se;
        row.pass = (row.lower - 3.0 * u.se <= u.mean) && (u.mean <= row.upper + 3.0 * u.se);
        rep.pass = rep.pass && row.pass;
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

void write_ensemble_csv(const ExitEnsemble& ensemble, std::ostream& os) {
    os << "exit_time,exit_radius,steps\n";
    char buf[160];
    for (const auto& rec : ensemble.records) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%ld\n", rec.exit_time, rec.exit_radius,
                      rec.steps);
        os << buf;
    }
}

}  // namespace recti
