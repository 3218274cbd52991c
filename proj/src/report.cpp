#include "recti/report.hpp"

#include "recti/svg.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace recti {

using ordered_json = nlohmann::ordered_json;

namespace {

std::map<std::string, std::string> parse_kv(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = val;
    }
    return kv;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    return out;
}

std::vector<std::string> parse_names(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        const auto a = tok.find_first_not_of(" \t");
        const auto b = tok.find_last_not_of(" \t");
        if (a != std::string::npos) out.push_back(tok.substr(a, b - a + 1));
    }
    return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_text(const std::string& text) {
    ExperimentConfig c;
    const auto kv = parse_kv(text);
    auto get = [&](const char* key) -> std::optional<std::string> {
        const auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        return it->second;
    };
    if (auto v = get("alpha")) c.alpha = std::stod(*v);
    if (auto v = get("dim")) c.dim = std::stoi(*v);
    if (auto v = get("ball_center")) c.ball_center = parse_list(*v);
    if (auto v = get("ball_radius_len")) c.ball_radius_len = std::stod(*v);
    if (auto v = get("fields")) c.fields = parse_names(*v);
    if (auto v = get("field")) c.fields = {*v};
    if (auto v = get("eps_len")) c.eps_len = std::stod(*v);
    if (auto v = get("eta_ring_len")) c.eta_ring_len = std::stod(*v);
    if (auto v = get("shell_split_n")) c.shell_split_n = std::stod(*v);
    if (auto v = get("start_delta_fracs")) c.start_delta_fracs = parse_list(*v);
    if (auto v = get("paths")) c.paths = std::stol(*v);
    if (auto v = get("time_step_time")) c.time_step_time = std::stod(*v);
    if (auto v = get("max_steps")) c.max_steps = std::stol(*v);
    if (auto v = get("master_seed")) c.master_seed = std::stoull(*v);
    if (auto v = get("threads")) c.threads = std::stoi(*v);
    if (auto v = get("censor_threshold_frac")) c.censor_threshold_frac = std::stod(*v);
    if (auto v = get("quad_abs_tol")) c.quad_abs_tol = std::stod(*v);
    if (auto v = get("quad_rel_tol")) c.quad_rel_tol = std::stod(*v);
    if (auto v = get("quad_max_subdivisions")) c.quad_max_subdivisions = std::stoi(*v);
    if (auto v = get("bin_edge_count")) c.bin_edge_count = std::stoi(*v);
    if (auto v = get("bin_xi_min_frac")) c.bin_xi_min_frac = std::stod(*v);
    if (auto v = get("bin_geo_ratio")) c.bin_geo_ratio = std::stod(*v);
    if (auto v = get("bin_far_limit_frac")) c.bin_far_limit_frac = std::stod(*v);
    if (auto v = get("spread_threshold")) c.spread_threshold = std::stod(*v);
    if (auto v = get("audit_grid_points")) c.audit_grid_points = std::stoi(*v);
    if (auto v = get("audit_paths")) c.audit_paths = std::stol(*v);
    if (auto v = get("out_dir")) c.out_dir = *v;

    // Re-validate the module preconditions at parse time.
    require(c.alpha > 0.0 && c.alpha < 2.0, "config: alpha must lie in (0,2)");
    require(c.dim >= 2, "config: dim must be at least 2");
    require(static_cast<int>(c.ball_center.size()) == c.dim,
            "config: ball_center must have dim entries");
    require(c.ball_radius_len > 0.0, "config: ball_radius_len must be positive");
    require(c.eps_len > 0.0 && c.eps_len <= c.ball_radius_len / 4.0,
            "config: eps_len must lie in (0, r/4]");
    require(c.eta_ring_len > 0.0 && c.eta_ring_len <= c.eps_len,
            "config: eta_ring_len must lie in (0, eps]");
    for (double f : c.start_delta_fracs)
        require(f > 0.0 && f <= 1.0, "config: start_delta_fracs must lie in (0,1]");
    require(c.paths >= 1, "config: paths must be positive");
    require(c.time_step_time > 0.0, "config: time_step_time must be positive");
    for (const auto& name : c.fields) builtin_field(name, c.dim);  // throws if unknown
    return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream is(path);
    require(is.good(), "config: cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return from_text(ss.str());
}

std::string ExperimentConfig::resolved_text() const {
    std::ostringstream os;
    char buf[256];
    auto num = [&](const char* k, double v) {
        std::snprintf(buf, sizeof buf, "%s = %.17g\n", k, v);
        os << buf;
    };
    num("alpha", alpha);
    num("dim", dim);
    os << "ball_center = ";
    for (std::size_t i = 0; i < ball_center.size(); ++i)
        os << (i ? "," : "") << ball_center[i];
    os << "\n";
    num("ball_radius_len", ball_radius_len);
    os << "fields = ";
    for (std::size_t i = 0; i < fields.size(); ++i) os << (i ? "," : "") << fields[i];
    os << "\n";
    num("eps_len", eps_len);
    num("eta_ring_len", eta_ring_len);
    num("shell_split_n", shell_split());
    os << "start_delta_fracs = ";
    for (std::size_t i = 0; i < start_delta_fracs.size(); ++i)
        os << (i ? "," : "") << start_delta_fracs[i];
    os << "\n";
    num("paths", static_cast<double>(paths));
    num("time_step_time", time_step_time);
    num("max_steps", static_cast<double>(max_steps));
    os << "master_seed = " << master_seed << "\n";
    num("censor_threshold_frac", censor_threshold_frac);
    num("quad_abs_tol", quad_abs_tol);
    num("quad_rel_tol", quad_rel_tol);
    num("quad_max_subdivisions", quad_max_subdivisions);
    num("bin_edge_count", bin_edge_count);
    num("bin_xi_min_frac", bin_xi_min_frac);
    num("bin_geo_ratio", bin_geo_ratio);
    num("bin_far_limit_frac", bin_far_limit_frac);
    num("spread_threshold", spread_threshold);
    num("audit_grid_points", audit_grid_points);
    num("audit_paths", static_cast<double>(audit_paths));
    return os.str();
}

SimulationSpec ExperimentConfig::simulation_spec() const {
    SimulationSpec s;
    s.time_step = time_step_time;
    s.max_steps = max_steps;
    s.paths = paths;
    s.master_seed = master_seed;
    s.censor_threshold = censor_threshold_frac;
    s.threads = threads;
    return s;
}

QuadratureSpec ExperimentConfig::quadrature_spec() const {
    QuadratureSpec q;
    q.abs_tol = quad_abs_tol;
    q.rel_tol = quad_rel_tol;
    q.max_subdivisions = quad_max_subdivisions;
    return q;
}

BinningSpec ExperimentConfig::binning_spec() const {
    BinningSpec b;
    b.edge_bins = bin_edge_count;
    b.xi_min = bin_xi_min_frac;
    b.geo_ratio = bin_geo_ratio;
    b.far_limit = bin_far_limit_frac;
    return b;
}

Vec ExperimentConfig::start_point(double delta_frac) const {
    Vec x = ball_center;
    x[0] += ball_radius_len * (1.0 - delta_frac);
    return x;
}

std::string Provenance::json() const {
    ordered_json j;
    j["master_seed"] = master_seed;
    j["config_hash"] = config_hash;
    j["version"] = version;
    return j.dump();
}

RatioReport make_ratio_report(const RadialHistogram& hist, double delta, double r, double alpha,
                              double threshold) {
    RatioReport rep;
    rep.total = hist.total;
    rep.delta = delta;
    rep.threshold = threshold;
    double min_ratio = std::numeric_limits<double>::infinity();
    double max_ratio = 0.0;
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        RatioRow row;
        row.lo = hist.edges[i];
        row.hi = hist.edges[i + 1];
        row.count = hist.counts[i];
        row.density = hist.density[i];
        row.density_se = hist.density_se[i];
        row.phi_avg = phi_integral(delta, r, row.lo, row.hi, alpha) / (row.hi - row.lo);
        if (row.count > 0) {
            row.ratio = row.density / row.phi_avg;
            row.ratio_lo = std::max(0.0, row.density - 1.96 * row.density_se) / row.phi_avg;
            row.ratio_hi = (row.density + 1.96 * row.density_se) / row.phi_avg;
            min_ratio = std::min(min_ratio, row.ratio);
            max_ratio = std::max(max_ratio, row.ratio);
        }
        rep.rows.push_back(row);
    }
    rep.min_ratio = std::isfinite(min_ratio) ? min_ratio : 0.0;
    rep.max_ratio = max_ratio;
    rep.spread = (rep.min_ratio > 0.0) ? rep.max_ratio / rep.min_ratio
                                       : std::numeric_limits<double>::infinity();
    rep.pass = ratio_verdict(rep);
    return rep;
}

bool ratio_verdict(const RatioReport& report) {
    if (!(report.min_ratio > 0.0)) return false;
    if (!(report.spread <= report.threshold)) return false;
    for (const auto& row : report.rows) {
        if (row.count == 0) continue;  // empty bins are flagged, not failed
        if (!(row.ratio_lo > 0.0) || !std::isfinite(row.ratio_hi)) return false;
    }
    return true;
}

void RatioReport::write_csv(std::ostream& os) const {
    os << "bin_lo,bin_hi,count,density,density_se,phi_avg,ratio,ratio_lo,ratio_hi\n";
    char buf[512];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      row.lo, row.hi, row.count, row.density, row.density_se, row.phi_avg,
                      row.ratio, row.ratio_lo, row.ratio_hi);
        os << buf;
    }
}

RatioReport ratio_report_from_csv(std::istream& is, double threshold) {
    RatioReport rep;
    rep.threshold = threshold;
    std::string line;
    std::getline(is, line);  // header
    double min_ratio = std::numeric_limits<double>::infinity();
    double max_ratio = 0.0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        RatioRow row;
        long count = 0;
        if (std::sscanf(line.c_str(), "%lf,%lf,%ld,%lf,%lf,%lf,%lf,%lf,%lf", &row.lo, &row.hi,
                        &count, &row.density, &row.density_se, &row.phi_avg, &row.ratio,
                        &row.ratio_lo, &row.ratio_hi) != 9)
            continue;
        row.count = count;
        rep.total += count;
        if (count > 0) {
            min_ratio = std::min(min_ratio, row.ratio);
            max_ratio = std::max(max_ratio, row.ratio);
        }
        rep.rows.push_back(row);
    }
    rep.min_ratio = std::isfinite(min_ratio) ? min_ratio : 0.0;
    rep.max_ratio = max_ratio;
    rep.spread = (rep.min_ratio > 0.0) ? rep.max_ratio / rep.min_ratio
                                       : std::numeric_limits<double>::infinity();
    rep.pass = ratio_verdict(rep);
    return rep;
}

DensityVerdict run_density_verdict(const ExperimentConfig& config) {
    DensityVerdict verdict;
    const Ball ball = config.ball();
    const StabilityIndex alpha(config.alpha);
    std::map<std::string, double> field_max_spread;
    for (const auto& field_name : config.fields) {
        const CoefficientField field = builtin_field(field_name, config.dim);
        for (double frac : config.start_delta_fracs) {
            SimulationSpec spec = config.simulation_spec();
            // Distinct substream block per combo so reruns are reproducible.
            spec.master_seed = config.master_seed + fnv1a(field_name) +
                               static_cast<std::uint64_t>(frac * 1e6);
            const Vec x0 = config.start_point(frac);
            ExitEnsemble ens = simulate_exit(x0, ball, field, alpha, spec);
            RadialHistogram hist = estimate_exit_density(ens, config.binning_spec());
            const double delta = ball.boundary_distance(x0);
            DensityCombo combo;
            combo.field = field_name;
            combo.delta_frac = frac;
            combo.report = make_ratio_report(hist, delta, ball.radius, config.alpha,
                                             config.spread_threshold);
            verdict.max_spread = std::max(verdict.max_spread, combo.report.spread);
            auto it = field_max_spread.find(field_name);
            if (it == field_max_spread.end())
                field_max_spread[field_name] = combo.report.spread;
            else
                it->second = std::max(it->second, combo.report.spread);
            verdict.combos.push_back(std::move(combo));
        }
    }
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& [name, s] : field_max_spread) {
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    verdict.cross_field_spread_ratio = (field_max_spread.size() >= 2 && lo > 0.0) ? hi / lo : 1.0;
    verdict.pass = true;
    for (const auto& combo : verdict.combos) verdict.pass = verdict.pass && combo.report.pass;
    if (field_max_spread.size() >= 2)
        verdict.pass = verdict.pass && verdict.cross_field_spread_ratio <= 2.0;
    return verdict;
}

SmallRingReport run_small_ring_check(const ExperimentConfig& config) {
    SmallRingReport rep;
    const Ball ball = config.ball();
    const StabilityIndex alpha(config.alpha);
    const CoefficientField field = builtin_field(config.fields.front(), config.dim);
    const double r = ball.radius;
    const double lo_edge = r + config.eps_len;
    const double hi_edge = lo_edge + config.eta_ring_len;
    auto ring_data = [lo_edge, hi_edge](double rho) {
        return (rho > lo_edge && rho < hi_edge) ? 1.0 : 0.0;
    };
    double min_ratio = std::numeric_limits<double>::infinity(), max_ratio = 0.0;
    for (double frac : config.start_delta_fracs) {
        SimulationSpec spec = config.simulation_spec();
        spec.master_seed = config.master_seed + static_cast<std::uint64_t>(frac * 1e6) + 17;
        const Vec x0 = config.start_point(frac);
        const MeanCI u = harmonic_eval(x0, ball, field, alpha, spec, ring_data);
        SmallRingRow row;
        row.delta_frac = frac;
        row.u_hat = u.mean;
        row.u_se = u.se;
        row.phi_ring =
            phi_integral(ball.boundary_distance(x0), r, lo_edge, hi_edge, config.alpha);
        row.ratio = row.u_hat / row.phi_ring;
        if (row.ratio > 0.0) {
            min_ratio = std::min(min_ratio, row.ratio);
            max_ratio = std::max(max_ratio, row.ratio);
        }
        rep.rows.push_back(row);
    }
    rep.spread = (min_ratio > 0.0 && std::isfinite(min_ratio)) ? max_ratio / min_ratio
                                                               : std::numeric_limits<double>::infinity();
    rep.pass = rep.spread <= config.spread_threshold;
    return rep;
}

bool LemmaAuditBundle::all_pass() const {
    for (const auto& item : items)
        if (!item.pass) return false;
    return true;
}

std::string LemmaAuditBundle::json() const {
    ordered_json j;
    j["provenance"] = ordered_json::parse(provenance.json());
    j["all_pass"] = all_pass();
    ordered_json arr = ordered_json::array();
    for (const auto& item : items) {
        ordered_json ji;
        ji["name"] = item.name;
        ji["pass"] = item.pass;
        ordered_json obs;
        for (const auto& [k, v] : item.observed) obs[k] = v;
        ji["observed"] = obs;
        arr.push_back(ji);
    }
    j["items"] = arr;
    return j.dump(2) + "\n";
}

std::string LemmaAuditBundle::summary() const {
    std::ostringstream os;
    for (const auto& item : items) {
        os << (item.pass ? "[PASS] " : "[FAIL] ") << item.name;
        for (const auto& [k, v] : item.observed) {
            char buf[128];
            std::snprintf(buf, sizeof buf, " %s=%.6g", k.c_str(), v);
            os << buf;
        }
        os << "\n";
    }
    os << (all_pass() ? "ALL PASS\n" : "SOME FAILURES\n");
    return os.str();
}

namespace {

std::vector<Vec> interior_grid(const Ball& ball, int n_radii, int n_angles, double inner_frac,
                               double outer_frac) {
    std::vector<Vec> grid;
    for (int i = 0; i < n_radii; ++i) {
        const double rho =
            ball.radius *
            (inner_frac + (outer_frac - inner_frac) * i / std::max(1, n_radii - 1));
        for (int j = 0; j < n_angles; ++j) {
            const double phi = 1.5707963267948966 * j / std::max(1, n_angles - 1);
            Vec x = ball.center;
            x[0] += rho * std::cos(phi);
            x[ball.dim() - 1] += rho * std::sin(phi);
            grid.push_back(std::move(x));
        }
    }
    return grid;
}

}  // namespace

LemmaAuditBundle run_lemma_audits(const ExperimentConfig& config) {
    LemmaAuditBundle bundle;
    bundle.provenance.master_seed = config.master_seed;
    bundle.provenance.config_hash = fnv1a(config.resolved_text());
    bundle.provenance.version = kLibraryVersion;

    const Ball ball = config.ball();
    const double r = ball.radius;
    const int d = config.dim;
    const QuadratureSpec quad = config.quadrature_spec();
    const CoefficientField field = builtin_field(config.fields.front(), d);

    // Hand constants.
    {
        AuditItem item;
        item.name = "hand_constants";
        const double pi = 3.14159265358979323846;
        const double a1 = a_alpha(StabilityIndex(1.0));
        const double at1 = a_tilde_alpha(StabilityIndex(1.0));
        item.observed["a_alpha_1"] = a1;
        item.observed["a_tilde_alpha_1"] = at1;
        item.pass = std::abs(a1 - 1.0 / pi) <= 1e-12 / pi && std::abs(at1 - 1.0) <= 1e-12;
        bundle.items.push_back(item);
    }

    // Generator identity for lambda across the standard alphas.
    for (double a : {0.5, 1.0, 1.5}) {
        AuditItem item;
        item.name = "lambda_identity_alpha_" + std::to_string(a).substr(0, 3);
        const double target = a_tilde_alpha(StabilityIndex(a));
        ScalarField lam = make_lambda_field(ball, a);
        Vec e_d(d, 0.0);
        e_d.back() = 1.0;
        double worst = 0.0;
        for (const auto& x : interior_grid(ball, 6, 5, 0.0, 0.99)) {
            QuadratureSpec q = quad;
            q.abs_tol = 1e-9 * target;
            const GeneratorValue gv = pv_directional(lam, x, e_d, a, q);
            worst = std::max(worst, std::abs(gv.value + target) / target);
        }
        item.observed["max_rel_dev"] = worst;
        item.pass = worst <= 1e-6;
        bundle.items.push_back(item);
    }

    // Generator identity for h.
    for (double a : {0.5, 1.0, 1.5}) {
        AuditItem item;
        item.name = "h_identity_alpha_" + std::to_string(a).substr(0, 3);
        ScalarField hf = make_h_field(ball, a);
        Vec e_d(d, 0.0);
        e_d.back() = 1.0;
        double worst = 0.0;
        for (const auto& x : interior_grid(ball, 6, 5, 0.0, 0.95)) {
            Vec rel(d);
            for (int i = 0; i < d; ++i) rel[i] = x[i] - ball.center[i];
            const double hx = h_eval(rel, r, a);
            QuadratureSpec q = quad;
            q.abs_tol = 1e-7 * hx;
            const GeneratorValue gv = pv_directional(hf, x, e_d, a, q);
            worst = std::max(worst, std::abs(gv.value) / hx);
        }
        item.observed["max_scaled_dev"] = worst;
        item.pass = worst <= 1e-5;
        bundle.items.push_back(item);
    }

    // Exact ring-generator antiderivative against quadrature.
    {
        AuditItem item;
        item.name = "ring_generator_exact_vs_quadrature";
        ScalarField gf = make_g_field(ball, config.eps_len, config.eta_ring_len);
        Vec e_d(d, 0.0);
        e_d.back() = 1.0;
        double worst = 0.0;
        for (const auto& x : interior_grid(ball, 10, 5, 0.0, 0.995)) {
            Vec rel(d);
            for (int i = 0; i < d; ++i) rel[i] = x[i] - ball.center[i];
            const double exact =
                Lg_closed_form(rel, ball, config.eps_len, config.eta_ring_len, config.alpha);
            QuadratureSpec q = quad;
            q.abs_tol = 1e-9 * exact;
            const GeneratorValue gv = pv_directional(gf, x, e_d, config.alpha, q);
            worst = std::max(worst, std::abs(gv.value - exact) / exact);
        }
        item.observed["max_rel_dev"] = worst;
        item.pass = worst <= 1e-6;
        bundle.items.push_back(item);
    }

    // |v|^alpha homogeneity.
    {
        AuditItem item;
        item.name = "scaling_homogeneity";
        ScalarField lam = make_lambda_field(ball, config.alpha);
        Vec v(d, 0.0);
        v.back() = 2.0;
        double worst = 0.0;
        for (const auto& x : interior_grid(ball, 3, 3, 0.1, 0.8)) {
            const GeneratorValue direct = pv_directional(lam, x, v, config.alpha, quad);
            const GeneratorValue reduced = scaling_reduce(lam, x, v, config.alpha, quad);
            worst = std::max(worst,
                             std::abs(direct.value - reduced.value) / std::abs(reduced.value));
        }
        item.observed["max_rel_dev"] = worst;
        item.pass = worst <= 1e-6;
        bundle.items.push_back(item);
    }

    // Barrier profile class conditions.
    const double N = config.shell_split();
    BarrierParams params = choose_theta_params(r, config.eps_len, N);
    params.eta_ring = config.eta_ring_len;
    PiecewiseTheta theta = build_theta(params);
    {
        AuditItem item;
        item.name = "theta_class";
        const ThetaAuditReport rep = theta_class_audit(theta, params);
        item.observed["observed_c1"] = rep.observed_c1;
        item.observed["observed_c2"] = rep.observed_c2;
        item.observed["sup_value"] = theta.sup_value();
        item.pass = rep.pass();
        bundle.items.push_back(item);
    }

    // Sign audits; keep the found ladder values for the sandwich check.
    double b1 = 0.0, b2 = 0.0;
    {
        const auto grid =
            make_audit_grid(ball, config.eps_len, N, config.audit_grid_points, 1e-3, d);
        QuadratureSpec q = quad;
        q.abs_tol = 1e-10;
        const SignAuditReport sup = sign_audit_super(theta, params, ball, config.alpha, grid, q);
        const SignAuditReport sub = sign_audit_sub(params, ball, config.alpha, grid, q);
        bundle.super_audit = sup;
        bundle.sub_audit = sub;
        b1 = sup.b;
        b2 = sub.b;
        AuditItem item;
        item.name = "sign_audit_super";
        item.observed["b1"] = sup.b;
        item.observed["worst_margin"] = sup.worst_margin;
        item.pass = sup.found;
        bundle.items.push_back(item);
        AuditItem item2;
        item2.name = "sign_audit_sub";
        item2.observed["b2"] = sub.b;
        item2.observed["worst_margin"] = sub.worst_margin;
        item2.pass = sub.found;
        bundle.items.push_back(item2);
    }

    // Ring preimage interval bounds and the two-sided ring measure shape.
    {
        AuditItem item;
        item.name = "ring_interval_bounds";
        RandomStream rng(config.master_seed ^ 0xabcdefULL);
        bool ok = true;
        double shape_lo = std::numeric_limits<double>::infinity(), shape_hi = 0.0;
        for (int trial = 0; trial < 2000; ++trial) {
            const double R = r * (1.3 + 3.0 * rng.uniform01());
            const double eta = r * (0.05 + 0.5 * rng.uniform01());
            Vec y(ball.center);
            const double rho = 0.95 * r * rng.uniform01();
            const double ang = 6.283185307179586 * rng.uniform01();
            y[0] += rho * std::cos(ang);
            y[1] += rho * std::sin(ang);
            const RingPreimage pre =
                ring_preimage(y, field, ball.center, R, eta);
            for (const auto& ax : pre.axes) {
                const double len_pos = ax.pos_hi - ax.pos_lo;
                const double len_neg = ax.neg_hi - ax.neg_lo;
                const double lo_bound = eta / ax.a_norm, hi_bound = 4.0 * eta / ax.a_norm;
                if (len_pos < lo_bound * (1 - 1e-9) || len_pos > hi_bound * (1 + 1e-9)) ok = false;
                if (len_neg < lo_bound * (1 - 1e-9) || len_neg > hi_bound * (1 + 1e-9)) ok = false;
            }
            const MuValue mu =
                mu_ring_measure(y, field, ball.center, r, R, eta, config.alpha);
            std::vector<double> mat(static_cast<std::size_t>(d) * d);
            field.matrix_at(y, mat);
            double approx = 0.0;
            for (int i = 0; i < d; ++i) {
                double an = 0.0;
                for (int j = 0; j < d; ++j) {
                    const double e = mat[static_cast<std::size_t>(i) * d + j];
                    an += e * e;
                }
                approx += std::pow(std::sqrt(an), config.alpha);
            }
            approx *= eta / std::pow(R, 1.0 + config.alpha);
            const double shape = mu.value / approx;
            shape_lo = std::min(shape_lo, shape);
            shape_hi = std::max(shape_hi, shape);
        }
        item.observed["shape_lo"] = shape_lo;
        item.observed["shape_hi"] = shape_hi;
        item.pass = ok && shape_lo > 0.0 && std::isfinite(shape_hi);
        bundle.items.push_back(item);
    }

    // Exterior measure lower bound.
    {
        AuditItem item;
        item.name = "exterior_lower_bound";
        RandomStream rng(config.master_seed ^ 0x1234567ULL);
        bool ok = true;
        double worst_gap = std::numeric_limits<double>::infinity();
        double c_obs = 0.0;
        for (int trial = 0; trial < 500; ++trial) {
            const double R = r * (1.0 + 3.0 * rng.uniform01());
            Vec x(ball.center);
            const double rho = 0.9 * R * rng.uniform01();
            const double ang = 6.283185307179586 * rng.uniform01();
            x[0] += rho * std::cos(ang);
            x[1] += rho * std::sin(ang);
            const double rx = (R - rho) / 3.0;
            Vec y = x;
            const double yang = 6.283185307179586 * rng.uniform01();
            y[0] += 0.99 * rx * std::cos(yang);
            y[1] += 0.99 * rx * std::sin(yang);
            const ExteriorMeasure em =
                mu_exterior_lower(y, field, ball.center, x, R, config.alpha);
            if (em.exact < em.envelope * (1 - 1e-9)) ok = false;
            worst_gap = std::min(worst_gap, em.exact / em.envelope);
            c_obs = em.c_constant;
        }
        item.observed["min_exact_over_envelope"] = worst_gap;
        item.observed["c_constant"] = c_obs;
        item.pass = ok && c_obs > 0.0;
        bundle.items.push_back(item);
    }

    // Monte Carlo cross-check of the exact ring measure.
    {
        AuditItem item;
        item.name = "ring_measure_mc";
        RandomStream rng(config.master_seed ^ 0x77777ULL);
        Vec y(ball.center);
        y[0] += 0.4 * r;
        y[1] -= 0.2 * r;
        const double R = 2.0 * r, eta = 0.25 * r;
        const MuValue exact = mu_ring_measure(y, field, ball.center, r, R, eta, config.alpha);
        const McEstimate mc =
            mu_ring_measure_mc(y, field, ball.center, r, R, eta, config.alpha, 1'000'000, rng);
        item.observed["exact"] = exact.value;
        item.observed["mc"] = mc.value;
        item.observed["mc_se"] = mc.se;
        item.pass = std::abs(mc.value - exact.value) <= 3.0 * mc.se;
        bundle.items.push_back(item);
    }

    // Levy system identity.
    {
        AuditItem item;
        item.name = "green_identity";
        SimulationSpec spec = config.simulation_spec();
        spec.paths = config.audit_paths;
        spec.master_seed = config.master_seed + 101;
        const RadialSet V{RadialSetKind::ring, 2.0 * r, 0.25 * r};
        const GreenCheck gc = estimate_green_integral(config.start_point(1.0), ball, field,
                                                      StabilityIndex(config.alpha), spec, V);
        const double se = std::sqrt(gc.lhs_se * gc.lhs_se + gc.rhs_se * gc.rhs_se);
        item.observed["lhs"] = gc.lhs;
        item.observed["rhs"] = gc.rhs;
        item.observed["combined_se"] = se;
        item.pass = std::abs(gc.lhs - gc.rhs) <= 3.0 * se;
        bundle.items.push_back(item);
    }

    // Ring exit probability against the exit-time envelope shape.
    {
        AuditItem item;
        item.name = "iw_ring_probability";
        SimulationSpec spec = config.simulation_spec();
        spec.paths = config.audit_paths;
        spec.master_seed = config.master_seed + 103;
        const double R = 2.0 * r, eta = 0.25 * r;
        const Vec x0 = config.start_point(0.5);
        ExitEnsemble ens =
            simulate_exit(x0, ball, field, StabilityIndex(config.alpha), spec);
        long hits = 0, n = 0;
        for (const auto& rec : ens.records) {
            if (rec.exit_radius < 0.0) continue;
            ++n;
            if (rec.exit_radius >= R && rec.exit_radius <= R + eta) ++hits;
        }
        const double p = static_cast<double>(hits) / n;
        const double rho = dist(x0, ball.center);
        const double envelope = std::pow(r * r - rho * rho, config.alpha / 2.0) * eta /
                                std::pow(R, 1.0 + config.alpha);
        item.observed["probability"] = p;
        item.observed["envelope"] = envelope;
        item.observed["ratio"] = p / envelope;
        item.pass = p > 0.0 && std::isfinite(p / envelope) && p / envelope > 0.0;
        bundle.items.push_back(item);
    }

    // Uniform exit probability from the inscribed small balls.
    {
        AuditItem item;
        item.name = "uniform_exit_probability";
        double p_min = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 20; ++k) {
            const double rho = 0.95 * r * k / 19.0;
            Vec x = ball.center;
            x[0] += rho;
            const double rx = (r - rho) / 3.0;
            const Ball small(x, rx);
            SimulationSpec spec = config.simulation_spec();
            spec.paths = std::max<long>(2000, config.audit_paths / 10);
            spec.master_seed = config.master_seed + 200 + k;
            spec.store_positions = true;
            spec.time_step = config.time_step_time * std::pow(rx / r, config.alpha);
            ExitEnsemble ens =
                simulate_exit(x, small, field, StabilityIndex(config.alpha), spec);
            long outside = 0, n = 0;
            for (std::size_t i = 0; i < ens.records.size(); ++i) {
                if (ens.records[i].exit_radius < 0.0) continue;
                ++n;
                if (dist(ens.exit_positions[i], ball.center) >= r) ++outside;
            }
            p_min = std::min(p_min, static_cast<double>(outside) / n);
        }
        item.observed["p_min"] = p_min;
        item.pass = p_min > 0.0;
        bundle.items.push_back(item);
    }

    // Boundary non-hitting proxy: shrinking near-sphere mass.
    {
        AuditItem item;
        item.name = "boundary_nonhit";
        SimulationSpec spec = config.simulation_spec();
        spec.paths = config.audit_paths;
        spec.master_seed = config.master_seed + 301;
        ExitEnsemble ens = simulate_exit(config.start_point(1.0), ball, field,
                                         StabilityIndex(config.alpha), spec);
        const double m1 = near_sphere_mass(ens, 0.1 * r);
        const double m2 = near_sphere_mass(ens, 0.01 * r);
        const double m3 = near_sphere_mass(ens, 0.001 * r);
        item.observed["mass_1e-1"] = m1;
        item.observed["mass_1e-2"] = m2;
        item.observed["mass_1e-3"] = m3;
        item.pass = m1 > m2 && m2 > m3;
        bundle.items.push_back(item);
    }

    // Exit-time envelope bracket.
    {
        AuditItem item;
        item.name = "exit_time_envelope";
        double ratio_lo = std::numeric_limits<double>::infinity(), ratio_hi = 0.0;
        for (int k = 0; k < 10; ++k) {
            const double rho = 0.9 * r * k / 9.0;
            Vec x = ball.center;
            x[0] += rho;
            SimulationSpec spec = config.simulation_spec();
            spec.paths = config.audit_paths;
            spec.master_seed = config.master_seed + 400 + k;
            ExitEnsemble ens =
                simulate_exit(x, ball, field, StabilityIndex(config.alpha), spec);
            const MeanCI m = estimate_exit_time_mean(ens);
            const double envelope = std::pow(r * r - rho * rho, config.alpha / 2.0);
            ratio_lo = std::min(ratio_lo, m.mean / envelope);
            ratio_hi = std::max(ratio_hi, m.mean / envelope);
        }
        item.observed["ratio_lo"] = ratio_lo;
        item.observed["ratio_hi"] = ratio_hi;
        item.observed["spread"] = ratio_hi / ratio_lo;
        item.pass = ratio_hi / ratio_lo <= 20.0;
        bundle.items.push_back(item);
    }

    // Barrier sandwich at the audited b values.
    {
        AuditItem item;
        item.name = "barrier_sandwich";
        std::vector<Vec> xs;
        for (int k = 0; k < 10; ++k) {
            const double rho = 0.9 * r * k / 9.0;
            Vec x = ball.center;
            x[0] += rho;
            xs.push_back(std::move(x));
        }
        SimulationSpec spec = config.simulation_spec();
        spec.paths = config.audit_paths;
        spec.master_seed = config.master_seed + 500;
        const SandwichReport rep = barrier_sandwich_check(
            xs, ball, field, StabilityIndex(config.alpha), spec, params, theta, b1, b2);
        int violations = 0;
        for (const auto& row : rep.rows)
            if (!row.pass) ++violations;
        item.observed["violations"] = violations;
        item.observed["b1"] = b1;
        item.observed["b2"] = b2;
        item.pass = rep.pass;
        bundle.items.push_back(item);
    }

    return bundle;
}

std::string plot_density_overlay(const RatioReport& report, double r, double alpha) {
    SvgPlot plot(760, 520, "Exit-radius density against the comparison profile");
    plot.set_log_x(true);
    plot.set_log_y(true);
    plot.set_axis_labels("exit radius", "density");
    std::vector<double> xs, emp, phi;
    for (const auto& row : report.rows) {
        if (row.count == 0) continue;
        const double yc = 0.5 * (row.lo + row.hi);
        xs.push_back(yc - r + r);  // bin center
        emp.push_back(row.density);
        phi.push_back(row.phi_avg);
    }
    plot.add_series("empirical", xs, emp, "#1f77b4", false, true);
    plot.add_series("phi profile", xs, phi, "#d62728", true, false);
    (void)alpha;
    return plot.render();
}

std::string plot_ratio_bins(const RatioReport& report, double r) {
    SvgPlot plot(760, 520, "Per-bin density-to-profile ratio");
    plot.set_log_x(true);
    plot.set_axis_labels("exit radius", "ratio");
    std::vector<double> xs, ys, lo, hi;
    for (const auto& row : report.rows) {
        if (row.count == 0) continue;
        xs.push_back(0.5 * (row.lo + row.hi));
        ys.push_back(row.ratio);
        lo.push_back(row.ratio_lo);
        hi.push_back(row.ratio_hi);
    }
    plot.add_error_bars(xs, lo, hi, "#999999");
    plot.add_series("ratio", xs, ys, "#2ca02c", false, true);
    (void)r;
    return plot.render();
}

std::string plot_theta_profiles(const PiecewiseTheta& theta, double r, double eps) {
    SvgPlot plot(760, 520, "Barrier profiles");
    plot.set_axis_labels("v", "value");
    std::vector<double> xs, th, big;
    const double r2 = r * r;
    for (int i = 0; i <= 600; ++i) {
        const double v = r2 * (1.0 - std::pow(1e-4, i / 600.0));
        xs.push_back(v);
        th.push_back(theta.value(v));
        big.push_back(Theta_eval(v, r, eps));
    }
    plot.add_series("theta", xs, th, "#1f77b4", true, false);
    plot.add_series("Theta", xs, big, "#d62728", true, false);
    return plot.render();
}

std::string plot_audit_margins(const SignAuditReport& super_rep, const SignAuditReport& sub_rep) {
    SvgPlot plot(760, 520, "Sign-audit margins");
    plot.set_axis_labels("|x|", "normalized margin");
    std::vector<double> xs1, ys1, xs2, ys2;
    for (const auto& p : super_rep.points) {
        xs1.push_back(p.radius);
        ys1.push_back(p.margin / std::abs(p.ring_term));
    }
    for (const auto& p : sub_rep.points) {
        xs2.push_back(p.radius);
        ys2.push_back(p.margin / std::abs(p.ring_term));
    }
    plot.add_series("superharmonic", xs1, ys1, "#1f77b4", false, true);
    plot.add_series("subharmonic", xs2, ys2, "#d62728", false, true);
    return plot.render();
}

double phi_tail_slope(const RatioReport& report, double r, double alpha, double delta) {
    // Least squares of log phi against log y over the far bins, on the exact
    // profile sampled at bin centers.
    std::vector<double> lx, ly;
    for (const auto& row : report.rows) {
        const double yc = 0.5 * (row.lo + row.hi);
        if (yc < 5.0 * r) continue;
        lx.push_back(std::log(yc));
        ly.push_back(std::log(phi_profile(delta, r, yc, alpha)));
    }
    require(lx.size() >= 2, "phi_tail_slope: not enough tail bins");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(lx.size());
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream os(p, std::ios::binary);
    require(os.good(), "write_text_file: cannot open " + path);
    os << content;
}

}  // namespace recti
