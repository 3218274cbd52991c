#pragma once

#include "recti/barrier_lib.hpp"
#include "recti/common.hpp"
#include "recti/geometry_fields.hpp"
#include "recti/levy_exact.hpp"
#include "recti/stable_math.hpp"

#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <vector>

namespace recti {

struct SimulationSpec {
    double time_step = 5e-4;
    long max_steps = 5'000'000;
    long paths = 100'000;
    std::uint64_t master_seed = 1;
    int step_halving_levels = 0;
    double censor_threshold = 1e-3;  // hard failure above this fraction
    int threads = 0;                 // 0: hardware concurrency
    bool store_positions = false;

    void validate() const {
        require(time_step > 0.0, "SimulationSpec: time_step must be positive");
        require(paths >= 1, "SimulationSpec: paths must be at least 1");
        require(max_steps >= 1, "SimulationSpec: max_steps must be at least 1");
    }
};

struct ExitRecord {
    double exit_time;
    double exit_radius;
    long steps;
};

struct ExitEnsemble {
    Vec start;
    Ball ball;
    std::vector<ExitRecord> records;
    long censored = 0;
    std::vector<Vec> exit_positions;        // filled when store_positions is set
    std::vector<double> green_path_sums;    // filled by the green-integral runner
};

class CensoringError : public std::runtime_error {
public:
    explicit CensoringError(const std::string& what) : std::runtime_error(what) {}
};

// Euler scheme for dX = A(X-) dZ with the coefficient frozen at the current
// state: X_{n+1} = X_n + A(X_n) dZ_n, dZ_n a vector of independent stable
// increments of span time_step. Stops at the first step leaving the open
// ball; the recorded exit radius is the post-jump distance to the center.
// Throws CensoringError if more than censor_threshold of the paths hit
// max_steps.
ExitEnsemble simulate_exit(const Vec& x0, const Ball& ball, const CoefficientField& field,
                           StabilityIndex alpha, const SimulationSpec& spec);

struct MeanCI {
    double mean = 0.0;
    double se = 0.0;
    double lo = 0.0;  // 95% normal interval
    double hi = 0.0;
    long n = 0;
};

MeanCI estimate_exit_time_mean(const ExitEnsemble& ensemble);

// Bias study: mean exit time at time_step, time_step/2, ...,
// time_step/2^levels, with levels = spec.step_halving_levels. Each level
// uses a distinct substream block of the master seed.
std::vector<MeanCI> step_halving_study(const Vec& x0, const Ball& ball,
                                       const CoefficientField& field, StabilityIndex alpha,
                                       const SimulationSpec& spec);

// Mass of exit radii in [r, r + kappa]; used for the boundary-non-hitting
// audit.
double near_sphere_mass(const ExitEnsemble& ensemble, double kappa);

struct BinningSpec {
    int edge_bins = 40;        // log-spaced bins on (r, (1+edge_span) r]
    double edge_span = 0.25;
    double xi_min = 1e-3;      // first edge at r (1 + xi_min)
    double geo_ratio = 1.25;   // geometric growth out to far_limit * r
    double far_limit = 20.0;
};

struct RadialHistogram {
    std::vector<double> edges;      // ascending, starting at r; last finite edge
    std::vector<long> counts;       // per bin between consecutive edges
    long overflow = 0;              // beyond the last edge
    long total = 0;
    std::vector<double> density;    // counts / (total * width)
    std::vector<double> density_se; // multinomial

    void write_csv(std::ostream& os) const;
};

RadialHistogram estimate_exit_density(const ExitEnsemble& ensemble, const BinningSpec& binning);

struct GreenCheck {
    double lhs = 0.0;  // empirical exit probability into V
    double lhs_se = 0.0;
    double rhs = 0.0;  // mean path sum of nu(X_n, V) dt
    double rhs_se = 0.0;
};

// Both sides of the exit identity for a radial set V about the ball center
// with dist(V, ball) > 0.
GreenCheck estimate_green_integral(const Vec& x0, const Ball& ball,
                                   const CoefficientField& field, StabilityIndex alpha,
                                   const SimulationSpec& spec, const RadialSet& V);

// MC mean of radial exterior data g(exit radius), with CI.
MeanCI harmonic_eval(const Vec& x0, const Ball& ball, const CoefficientField& field,
                     StabilityIndex alpha, const SimulationSpec& spec,
                     const std::function<double(double)>& g_radial);

struct SandwichRow {
    Vec x;
    double lower = 0.0;   // F_{b2,Theta}(x)
    double upper = 0.0;   // f_{b1,theta}(x)
    double u_hat = 0.0;
    double u_se = 0.0;
    bool pass = false;
};

struct SandwichReport {
    std::vector<SandwichRow> rows;
    bool pass = true;
};

// Checks F_{b2,Theta}(x) - 3 se <= u_hat(x) <= f_{b1,theta}(x) + 3 se for the
// ring-indicator exterior data.
SandwichReport barrier_sandwich_check(const std::vector<Vec>& xs, const Ball& ball,
                                      const CoefficientField& field, StabilityIndex alpha,
                                      const SimulationSpec& spec, const BarrierParams& params,
                                      const PiecewiseTheta& theta, double b1, double b2);

void write_ensemble_csv(const ExitEnsemble& ensemble, std::ostream& os);

}  // namespace recti
