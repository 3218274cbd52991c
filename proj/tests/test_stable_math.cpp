#include "recti/stable_math.hpp"

#include "recti/gamma.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace recti;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("stability index rejects the endpoints") {
    CHECK_THROWS(StabilityIndex(0.0));
    CHECK_THROWS(StabilityIndex(2.0));
    CHECK_THROWS(StabilityIndex(-0.3));
    CHECK_NOTHROW(StabilityIndex(1e-6));
    CHECK_NOTHROW(StabilityIndex(2.0 - 1e-6));
}

TEST_CASE("gamma function matches the extended-precision oracle") {
    for (int i = 0; i < 200; ++i) {
        const double x = 0.02 + i * 0.06;  // 0.02 .. ~12
        const double ref = static_cast<double>(oracles::gamma_oracle(x));
        CHECK(std::abs(gamma_fn(x) - ref) <= 2e-13 * std::abs(ref));
    }
}

TEST_CASE("generator constants at alpha = 1 take their closed values") {
    CHECK(std::abs(a_alpha(StabilityIndex(1.0)) - 1.0 / kPi) <= 1e-12 / kPi);
    CHECK(std::abs(a_tilde_alpha(StabilityIndex(1.0)) - 1.0) <= 1e-12);
    const GeneratorConstants gc = GeneratorConstants::compute(StabilityIndex(1.0));
    CHECK(gc.a_alpha == a_alpha(StabilityIndex(1.0)));
    CHECK(gc.a_tilde_alpha == a_tilde_alpha(StabilityIndex(1.0)));
}

TEST_CASE("a_alpha at alpha = 1/2 reduces by gamma cancellation") {
    // Gamma((1+a)/2) = Gamma(1-a/2) = Gamma(3/4) cancel, leaving 1/(2 sqrt(2 pi)).
    const double expected = 1.0 / (2.0 * std::sqrt(2.0 * kPi));
    CHECK(std::abs(a_alpha(StabilityIndex(0.5)) - expected) <= 1e-13);
}

TEST_CASE("generator constants agree with the oracle across the alpha range") {
    for (int i = 1; i <= 50; ++i) {
        const double a = 2.0 * i / 51.0;
        const long double g1 = oracles::gamma_oracle((1.0L + a) / 2.0L);
        const long double g2 = oracles::gamma_oracle(1.0L - a / 2.0L);
        const long double g3 = oracles::gamma_oracle(1.0L + a / 2.0L);
        const double ref_a = static_cast<double>(
            a * std::pow(2.0L, (long double)a - 1.0L) / std::sqrt((long double)kPi) * g1 / g2);
        const double ref_t = static_cast<double>(
            std::pow(2.0L, (long double)a) / std::sqrt((long double)kPi) * g1 * g3);
        CHECK(a_alpha(StabilityIndex(a)) == doctest::Approx(ref_a).epsilon(1e-12));
        CHECK(a_tilde_alpha(StabilityIndex(a)) == doctest::Approx(ref_t).epsilon(1e-12));
        CHECK(a_alpha(StabilityIndex(a)) > 0.0);
        CHECK(a_tilde_alpha(StabilityIndex(a)) > 0.0);
    }
}

TEST_CASE("constants are continuous on a grid (no NaN, no jumps)") {
    double prev_a = 0.0, prev_t = 0.0;
    for (int i = 1; i <= 100; ++i) {
        const double a = 2.0 * i / 101.0;
        const double va = a_alpha(StabilityIndex(a));
        const double vt = a_tilde_alpha(StabilityIndex(a));
        CHECK(std::isfinite(va));
        CHECK(std::isfinite(vt));
        if (i > 1) {
            CHECK(std::abs(va - prev_a) < 0.35);
            CHECK(std::abs(vt - prev_t) < 0.35);
        }
        prev_a = va;
        prev_t = vt;
    }
}

TEST_CASE("stable sampler is deterministic under the seed") {
    RandomStream r1 = RandomStream::substream(42, 7);
    RandomStream r2 = RandomStream::substream(42, 7);
    for (int i = 0; i < 100; ++i)
        CHECK(sample_standard_stable(StabilityIndex(1.3), r1) ==
              sample_standard_stable(StabilityIndex(1.3), r2));
    RandomStream r3 = RandomStream::substream(42, 8);
    bool all_equal = true;
    RandomStream r4 = RandomStream::substream(42, 7);
    for (int i = 0; i < 100; ++i)
        all_equal = all_equal && (sample_standard_stable(StabilityIndex(1.3), r3) ==
                                  sample_standard_stable(StabilityIndex(1.3), r4));
    CHECK(!all_equal);
}

TEST_CASE("stable sampler symmetry: mean sign within 3/sqrt(n)") {
    const long n = 1'000'000;
    RandomStream rng(2024);
    for (double a : {0.6, 1.0, 1.7}) {
        double s = 0.0;
        for (long i = 0; i < n; ++i)
            s += sample_standard_stable(StabilityIndex(a), rng) > 0 ? 1.0 : -1.0;
        CHECK(std::abs(s / n) <= 3.0 / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("alpha = 1 sampler reproduces the exact Cauchy tail") {
    const long n = 10'000'000;
    RandomStream rng(515151);
    std::vector<long> hits(3, 0);
    const double ts[3] = {10.0, 30.0, 100.0};
    for (long i = 0; i < n; ++i) {
        const double v = std::abs(sample_standard_stable(StabilityIndex(1.0), rng));
        for (int k = 0; k < 3; ++k)
            if (v > ts[k]) ++hits[k];
    }
    for (int k = 0; k < 3; ++k) {
        const double p_hat = static_cast<double>(hits[k]) / n;
        const double p = oracles::cauchy_tail(ts[k]);
        const double se = std::sqrt(p * (1.0 - p) / n);
        CHECK(std::abs(p_hat - p) <= 3.0 * se);
    }
}

TEST_CASE("scaled tail constant approaches 2 A_alpha / alpha") {
    // At finite t the tail series has a known second-order term; the check
    // allows that systematic part (with 60% slack) plus 3 binomial SEs.
    const long n = 10'000'000;
    for (double a : {0.5, 1.0, 1.5}) {
        RandomStream rng(99000 + static_cast<std::uint64_t>(10 * a));
        const double limit = 2.0 * a_alpha(StabilityIndex(a)) / a;
        const double ts[3] = {10.0, 30.0, 100.0};
        std::vector<long> hits(3, 0);
        for (long i = 0; i < n; ++i) {
            const double v = std::abs(sample_standard_stable(StabilityIndex(a), rng));
            for (int k = 0; k < 3; ++k)
                if (v > ts[k]) ++hits[k];
        }
        double prev_dev = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 3; ++k) {
            const double scaled = static_cast<double>(hits[k]) / n * std::pow(ts[k], a);
            const double se =
                std::sqrt(static_cast<double>(hits[k]) / n / n) * std::pow(ts[k], a);
            const double allowance =
                (a == 1.0 ? limit * std::pow(ts[k], -2.0) / 2.0
                          : limit * oracles::stable_tail_second_term_ratio(a, ts[k])) *
                1.6;
            CHECK(std::abs(scaled - limit) <= allowance + 3.0 * se);
            // Convergence direction as t grows, up to noise.
            const double dev = std::abs(scaled - limit);
            CHECK(dev <= prev_dev + 5.0 * se);
            prev_dev = dev;
        }
    }
}

TEST_CASE("increments: dt = 1 equals a standard draw, dt <= 0 rejected") {
    RandomStream r1 = RandomStream::substream(5, 0);
    RandomStream r2 = RandomStream::substream(5, 0);
    for (int i = 0; i < 50; ++i)
        CHECK(sample_increment(StabilityIndex(0.8), 1.0, r1) ==
              sample_standard_stable(StabilityIndex(0.8), r2));
    RandomStream r3(1);
    CHECK_THROWS(sample_increment(StabilityIndex(0.8), 0.0, r3));
    CHECK_THROWS(sample_increment(StabilityIndex(0.8), -1.0, r3));
}

TEST_CASE("increments scale quantiles by dt^(1/alpha)") {
    const double a = 1.5;
    const double dt = std::pow(2.0, -a);
    const long n = 1'000'000;
    const int blocks = 10;
    std::vector<double> block_ratio(blocks);
    RandomStream rng(777);
    for (int b = 0; b < blocks; ++b) {
        std::vector<double> small(n / blocks), unit(n / blocks);
        for (std::size_t i = 0; i < small.size(); ++i) {
            small[i] = sample_increment(StabilityIndex(a), dt, rng);
            unit[i] = sample_standard_stable(StabilityIndex(a), rng);
        }
        auto quantile = [](std::vector<double>& v, double p) {
            const std::size_t k = static_cast<std::size_t>(p * (v.size() - 1));
            std::nth_element(v.begin(), v.begin() + k, v.end());
            return v[k];
        };
        block_ratio[b] = quantile(small, 0.9) / quantile(unit, 0.9);
    }
    double mean = 0.0, var = 0.0;
    for (double v : block_ratio) mean += v;
    mean /= blocks;
    for (double v : block_ratio) var += (v - mean) * (v - mean);
    var /= (blocks - 1);
    const double se = std::sqrt(var / blocks);
    CHECK(std::abs(mean - std::pow(dt, 1.0 / a)) <= 4.0 * se);
}
