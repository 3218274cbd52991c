// Command-line driver: barrier construction, generator verification, lemma
// audits, exit simulation, the density verdict, the small-ring check, and
// SVG emission from saved reports.

#include "recti/report.hpp"
#include "recti/svg.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace recti;

ExperimentConfig load_config(const std::string& config_path, std::uint64_t seed_override,
                             long paths_override, double alpha_override,
                             const std::string& out_override) {
    ExperimentConfig config = config_path.empty() ? ExperimentConfig()
                                                  : ExperimentConfig::from_file(config_path);
    if (seed_override != 0) config.master_seed = seed_override;
    if (paths_override > 0) config.paths = paths_override;
    if (alpha_override > 0.0) config.alpha = alpha_override;
    if (!out_override.empty()) config.out_dir = out_override;
    return config;
}

Provenance make_provenance(const ExperimentConfig& config) {
    Provenance p;
    p.master_seed = config.master_seed;
    p.config_hash = fnv1a(config.resolved_text());
    p.version = kLibraryVersion;
    return p;
}

void write_manifest(const ExperimentConfig& config, const std::string& name) {
    std::ostringstream os;
    os << "{\n  \"provenance\": " << make_provenance(config).json()
       << ",\n  \"resolved_config\": \"";
    for (char c : config.resolved_text()) {
        if (c == '\n') os << "\\n";
        else if (c == '"') os << "\\\"";
        else os << c;
    }
    os << "\"\n}\n";
    write_text_file(config.out_dir + "/" + name, os.str());
}

int cmd_theta_build(const ExperimentConfig& config) {
    const double N = config.shell_split();
    const BarrierParams params = choose_theta_params(config.ball_radius_len, config.eps_len, N);
    const PiecewiseTheta theta = build_theta(params);
    const ThetaAuditReport audit = theta_class_audit(theta, params);
    std::ostringstream csv;
    theta.write_csv(csv);
    write_text_file(config.out_dir + "/theta_pieces.csv", csv.str());
    write_text_file(config.out_dir + "/theta_profile.svg",
                    plot_theta_profiles(theta, config.ball_radius_len, config.eps_len));
    write_manifest(config, "theta_manifest.json");
    std::cout << "theta: K1=" << params.K1 << " K2=" << params.K2 << " N=" << N
              << " sup=" << theta.sup_value() << "\n";
    std::cout << (audit.pass() ? "class audit: PASS\n" : "class audit: FAIL\n");
    return audit.pass() ? 0 : 1;
}

int cmd_generator_verify(const ExperimentConfig& config) {
    // The three closed-form identities at the configured alpha.
    const Ball ball = config.ball();
    const int d = config.dim;
    Vec e_d(d, 0.0);
    e_d.back() = 1.0;
    const QuadratureSpec quad = config.quadrature_spec();
    const double target = a_tilde_alpha(StabilityIndex(config.alpha));
    bool pass = true;

    ScalarField lam = make_lambda_field(ball, config.alpha);
    double worst_lambda = 0.0;
    for (int k = 0; k < 10; ++k) {
        Vec x = ball.center;
        x[0] += 0.099 * ball.radius * k;
        QuadratureSpec q = quad;
        q.abs_tol = 1e-9 * target;
        const GeneratorValue gv = pv_directional(lam, x, e_d, config.alpha, q);
        worst_lambda = std::max(worst_lambda, std::abs(gv.value + target) / target);
    }
    std::cout << "lambda identity: max rel dev " << worst_lambda
              << (worst_lambda <= 1e-6 ? " PASS" : " FAIL") << "\n";
    pass = pass && worst_lambda <= 1e-6;

    ScalarField hf = make_h_field(ball, config.alpha);
    double worst_h = 0.0;
    for (int k = 0; k < 10; ++k) {
        Vec x = ball.center;
        x[0] += 0.095 * ball.radius * k;
        Vec rel(d);
        for (int i = 0; i < d; ++i) rel[i] = x[i] - ball.center[i];
        const double hx = h_eval(rel, ball.radius, config.alpha);
        QuadratureSpec q = quad;
        q.abs_tol = 1e-7 * hx;
        const GeneratorValue gv = pv_directional(hf, x, e_d, config.alpha, q);
        worst_h = std::max(worst_h, std::abs(gv.value) / hx);
    }
    std::cout << "h identity: max scaled dev " << worst_h
              << (worst_h <= 1e-5 ? " PASS" : " FAIL") << "\n";
    pass = pass && worst_h <= 1e-5;
    return pass ? 0 : 1;
}

int cmd_lemma_audit(const ExperimentConfig& config) {
    const LemmaAuditBundle bundle = run_lemma_audits(config);
    write_text_file(config.out_dir + "/lemma_audit.json", bundle.json());
    write_text_file(config.out_dir + "/lemma_audit_summary.txt", bundle.summary());
    std::ostringstream sup_csv, sub_csv;
    bundle.super_audit.write_csv(sup_csv);
    bundle.sub_audit.write_csv(sub_csv);
    write_text_file(config.out_dir + "/sign_audit_super.csv", sup_csv.str());
    write_text_file(config.out_dir + "/sign_audit_sub.csv", sub_csv.str());
    write_text_file(config.out_dir + "/sign_audit_super.json", bundle.super_audit.to_json());
    write_text_file(config.out_dir + "/sign_audit_sub.json", bundle.sub_audit.to_json());
    write_text_file(config.out_dir + "/audit_margins.svg",
                    plot_audit_margins(bundle.super_audit, bundle.sub_audit));
    std::cout << bundle.summary();
    return bundle.all_pass() ? 0 : 1;
}

int cmd_simulate_exit(const ExperimentConfig& config) {
    const Ball ball = config.ball();
    const CoefficientField field = builtin_field(config.fields.front(), config.dim);
    const Vec x0 = config.start_point(config.start_delta_fracs.front());
    const ExitEnsemble ens =
        simulate_exit(x0, ball, field, StabilityIndex(config.alpha), config.simulation_spec());
    std::ostringstream records;
    write_ensemble_csv(ens, records);
    write_text_file(config.out_dir + "/exit_records.csv", records.str());
    const RadialHistogram hist = estimate_exit_density(ens, config.binning_spec());
    std::ostringstream hist_csv;
    hist.write_csv(hist_csv);
    write_text_file(config.out_dir + "/exit_histogram.csv", hist_csv.str());
    write_manifest(config, "exit_manifest.json");
    const MeanCI tau = estimate_exit_time_mean(ens);
    std::cout << "paths " << config.paths << ", censored " << ens.censored << ", mean exit time "
              << tau.mean << " [" << tau.lo << ", " << tau.hi << "]\n";
    return 0;
}

int cmd_density_verdict(const ExperimentConfig& config) {
    const DensityVerdict verdict = run_density_verdict(config);
    for (const auto& combo : verdict.combos) {
        std::ostringstream csv;
        combo.report.write_csv(csv);
        char name[256];
        std::snprintf(name, sizeof name, "ratio_%s_delta%g.csv", combo.field.c_str(),
                      combo.delta_frac);
        write_text_file(config.out_dir + "/" + name, csv.str());
        std::snprintf(name, sizeof name, "overlay_%s_delta%g.svg", combo.field.c_str(),
                      combo.delta_frac);
        write_text_file(config.out_dir + "/" + name,
                        plot_density_overlay(combo.report, config.ball_radius_len, config.alpha));
        std::cout << combo.field << " delta=" << combo.delta_frac << ": spread "
                  << combo.report.spread << (combo.report.pass ? " PASS" : " FAIL") << "\n";
    }
    std::cout << "max spread " << verdict.max_spread << ", cross-field ratio "
              << verdict.cross_field_spread_ratio << "\n";
    write_manifest(config, "density_manifest.json");
    std::cout << (verdict.pass ? "density verdict: PASS\n" : "density verdict: FAIL\n");
    return verdict.pass ? 0 : 1;
}

int cmd_small_ring(const ExperimentConfig& config) {
    const SmallRingReport rep = run_small_ring_check(config);
    for (const auto& row : rep.rows)
        std::cout << "delta_frac " << row.delta_frac << ": u_hat " << row.u_hat << " phi "
                  << row.phi_ring << " ratio " << row.ratio << "\n";
    std::cout << "spread " << rep.spread << (rep.pass ? " PASS" : " FAIL") << "\n";
    write_manifest(config, "small_ring_manifest.json");
    return rep.pass ? 0 : 1;
}

int cmd_plots(const ExperimentConfig& config, const std::string& ratio_csv) {
    std::ifstream is(ratio_csv);
    if (!is.good()) {
        std::cerr << "plots: cannot open " << ratio_csv << "\n";
        return 1;
    }
    const RatioReport rep = ratio_report_from_csv(is, config.spread_threshold);
    write_text_file(config.out_dir + "/overlay_from_csv.svg",
                    plot_density_overlay(rep, config.ball_radius_len, config.alpha));
    write_text_file(config.out_dir + "/ratio_from_csv.svg",
                    plot_ratio_bins(rep, config.ball_radius_len));
    std::cout << "spread " << rep.spread << (rep.pass ? " PASS" : " FAIL") << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"x-dependent rectilinear stable process toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand name

    std::string config_path, out_dir, ratio_csv;
    std::uint64_t seed = 0;
    long paths = 0;
    double alpha = 0.0;
    app.add_option("--config", config_path, "configuration file (key = value lines)");
    app.add_option("--seed", seed, "master seed override");
    app.add_option("--out", out_dir, "output directory override");
    app.add_option("--paths", paths, "path count override");
    app.add_option("--alpha", alpha, "stability index override");

    auto* theta = app.add_subcommand("theta-build", "build and audit the barrier profile");
    auto* gen = app.add_subcommand("generator-verify", "check the generator identities");
    auto* lemma = app.add_subcommand("lemma-audit", "run the full audit bundle");
    auto* sim = app.add_subcommand("simulate-exit", "simulate exits and write records");
    auto* dens = app.add_subcommand("density-verdict", "exit-density comparison verdict");
    auto* ring = app.add_subcommand("small-ring-check", "harmonic value against the profile integral");
    auto* plots = app.add_subcommand("plots", "render SVG plots from a saved ratio CSV");
    plots->add_option("--ratio-csv", ratio_csv, "ratio report CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        const recti::ExperimentConfig config =
            load_config(config_path, seed, paths, alpha, out_dir);
        if (theta->parsed()) return cmd_theta_build(config);
        if (gen->parsed()) return cmd_generator_verify(config);
        if (lemma->parsed()) return cmd_lemma_audit(config);
        if (sim->parsed()) return cmd_simulate_exit(config);
        if (dens->parsed()) return cmd_density_verdict(config);
        if (ring->parsed()) return cmd_small_ring(config);
        if (plots->parsed()) return cmd_plots(config, ratio_csv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
