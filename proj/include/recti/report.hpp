#pragma once

#include "recti/barrier_lib.hpp"
#include "recti/exit_mc.hpp"
#include "recti/geometry_fields.hpp"
#include "recti/nonlocal_quad.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace recti {

// Flat key = value experiment configuration. Keys carry their unit in the
// name (_len, _time, _frac); see docs/formats.md for the schema.
struct ExperimentConfig {
    double alpha = 1.0;
    int dim = 2;
    Vec ball_center = {0.0, 0.0};
    double ball_radius_len = 1.0;
    std::vector<std::string> fields = {"identity"};
    double eps_len = 0.25;
    double eta_ring_len = 0.25;
    double shell_split_n = 0.0;  // 0: default rule
    std::vector<double> start_delta_fracs = {1.0, 0.1, 0.02};

    long paths = 100000;
    double time_step_time = 5e-4;
    long max_steps = 5'000'000;
    std::uint64_t master_seed = 123456789;
    int threads = 0;
    double censor_threshold_frac = 1e-3;

    double quad_abs_tol = 1e-9;
    double quad_rel_tol = 1e-9;
    int quad_max_subdivisions = 20000;

    int bin_edge_count = 40;
    double bin_xi_min_frac = 1e-3;
    double bin_geo_ratio = 1.25;
    double bin_far_limit_frac = 20.0;

    double spread_threshold = 25.0;
    int audit_grid_points = 60;
    long audit_paths = 20000;
    std::string out_dir = "out";

    static ExperimentConfig from_text(const std::string& text);
    static ExperimentConfig from_file(const std::string& path);
    std::string resolved_text() const;  // canonical listing, hashed for provenance

    Ball ball() const { return Ball(ball_center, ball_radius_len); }
    double shell_split() const {
        return shell_split_n > 0.0 ? shell_split_n
                                   : default_shell_split(ball_radius_len, eps_len);
    }
    SimulationSpec simulation_spec() const;
    QuadratureSpec quadrature_spec() const;
    BinningSpec binning_spec() const;
    Vec start_point(double delta_frac) const;
};

struct Provenance {
    std::uint64_t master_seed = 0;
    std::uint64_t config_hash = 0;
    std::string version;
    std::string json() const;
};

struct RatioRow {
    double lo = 0.0, hi = 0.0;
    long count = 0;
    double density = 0.0, density_se = 0.0;
    double phi_avg = 0.0;
    double ratio = 0.0, ratio_lo = 0.0, ratio_hi = 0.0;
};

struct RatioReport {
    std::vector<RatioRow> rows;  // bins on (r, far_limit r]
    long total = 0;
    double delta = 0.0;
    double min_ratio = 0.0, max_ratio = 0.0, spread = 0.0;
    double threshold = 25.0;
    bool pass = false;
    void write_csv(std::ostream& os) const;
};

// Per-bin comparison of the empirical exit density against the comparison
// profile; the verdict is pure in the report contents.
RatioReport make_ratio_report(const RadialHistogram& hist, double delta, double r, double alpha,
                              double threshold);
bool ratio_verdict(const RatioReport& report);
RatioReport ratio_report_from_csv(std::istream& is, double threshold);

struct DensityCombo {
    std::string field;
    double delta_frac = 0.0;
    RatioReport report;
};

struct DensityVerdict {
    std::vector<DensityCombo> combos;
    double max_spread = 0.0;
    double cross_field_spread_ratio = 1.0;
    bool pass = false;
};

DensityVerdict run_density_verdict(const ExperimentConfig& config);

struct SmallRingRow {
    double delta_frac = 0.0;
    double u_hat = 0.0, u_se = 0.0;
    double phi_ring = 0.0;
    double ratio = 0.0;
};

struct SmallRingReport {
    std::vector<SmallRingRow> rows;
    double spread = 0.0;
    bool pass = false;
};

SmallRingReport run_small_ring_check(const ExperimentConfig& config);

struct AuditItem {
    std::string name;
    bool pass = false;
    std::map<std::string, double> observed;
};

struct LemmaAuditBundle {
    std::vector<AuditItem> items;
    Provenance provenance;
    SignAuditReport super_audit;
    SignAuditReport sub_audit;
    bool all_pass() const;
    std::string json() const;
    std::string summary() const;
};

LemmaAuditBundle run_lemma_audits(const ExperimentConfig& config);

// SVG emission. All writers are pure functions of the passed reports.
std::string plot_density_overlay(const RatioReport& report, double r, double alpha);
std::string plot_ratio_bins(const RatioReport& report, double r);
std::string plot_theta_profiles(const PiecewiseTheta& theta, double r, double eps);
std::string plot_audit_margins(const SignAuditReport& super_rep, const SignAuditReport& sub_rep);

// Tail slope of log phi against log y over bins beyond y > 5 r.
double phi_tail_slope(const RatioReport& report, double r, double alpha, double delta);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace recti
