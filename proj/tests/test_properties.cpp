#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "igo/cycle.hpp"
#include "igo/design.hpp"
#include "igo/plant.hpp"
#include "igo/simulate.hpp"
#include "oracles.hpp"

using Catch::Approx;
using namespace igo;

namespace {

void check_zeno_and_positivity(const Trajectory& traj) {
    for (const FiringEvent& ev : traj.events) {
        CHECK(ev.T >= traj.mod.bounds.Phi1);
        CHECK(ev.T <= traj.mod.bounds.Phi2);
        for (int i = 0; i < 3; ++i) {
            CHECK(ev.state_pre[i] >= 0.0);
            CHECK(ev.state_post[i] >= 0.0);
        }
    }
    for (const TrajectorySample& sm : traj.samples)
        for (int i = 0; i < 3; ++i) CHECK(sm.state[i] >= 0.0);
}

}  // namespace

TEST_CASE("fixed points propagate back to themselves across random cycles") {
    std::mt19937_64 rng(20260814);
    std::uniform_real_distribution<double> uT(2.0, 40.0);
    std::uniform_real_distribution<double> ul(std::log(0.5), std::log(2000.0));
    for (int trial = 0; trial < 100; ++trial) {
        const PlantLTI p = oracle::random_plant(rng);
        const double T = uT(rng);
        const double lambda = std::exp(ul(rng));

        // the constructor cross-checks the resolvent and divided-difference
        // forms at 1e-8 relative and raises on disagreement
        Vec3 x;
        REQUIRE_NOTHROW(x = fixed_point(p, T, lambda));

        for (int i = 0; i < 3; ++i) CHECK(x[i] > 0.0);

        const Vec3 back = mat_exp(p.A, T) * (x + lambda * p.B);
        for (int i = 0; i < 3; ++i)
            CHECK(std::abs(back[i] - x[i]) <= 1e-8 * std::max(1.0, std::abs(x[i])));

        // the flow at the pre-firing state points strictly down in every
        // coordinate, which is what traps the cycle in the positive orthant
        const Vec3 drift = p.A * x;
        for (int i = 0; i < 3; ++i) CHECK(drift[i] < 0.0);
    }
}

TEST_CASE("analytic corridor bounds agree with dense sampling") {
    std::mt19937_64 rng(77002);
    std::uniform_real_distribution<double> uT(2.0, 40.0);
    std::uniform_real_distribution<double> ul(std::log(0.5), std::log(500.0));
    for (int trial = 0; trial < 25; ++trial) {
        const PlantLTI p = oracle::random_plant(rng);
        const double T = uT(rng);
        const double lambda = std::exp(ul(rng));

        const CorridorAnalysis ca = corridor_extrema(p, T, lambda);
        const auto kernel = detail::cycle_kernel(p, T, {});
        const auto sampled = oracle::sample_cycle_output(p, T, lambda, kernel.w, 1000000);

        CHECK(std::abs(ca.y_bar_min - sampled.lo) <= 1e-6 * std::abs(sampled.lo));
        CHECK(std::abs(ca.y_bar_max - sampled.hi) <= 1e-6 * std::abs(sampled.hi));
        // Stationary bounds can only improve on sampled ones. The slack
        // covers the sampler's own rounding drift over 10^6 incremental
        // propagation steps, which reaches a few parts in 10^11.
        CHECK(ca.y_bar_min <= sampled.lo * (1.0 + 1e-9));
        CHECK(ca.y_bar_max >= sampled.hi * (1.0 - 1e-9));
    }
}

TEST_CASE("a measurement map in the loop equals a measurement map in the law") {
    std::mt19937_64 rng(910);
    std::uniform_real_distribution<double> uT(5.0, 30.0);
    std::uniform_real_distribution<double> ul(std::log(5.0), std::log(500.0));
    std::uniform_real_distribution<double> ug(1.2, 4.0);
    std::uniform_real_distribution<double> uc(1.0, 8.0);
    std::uniform_real_distribution<double> us(0.0, 1.0);

    int done = 0;
    while (done < 10) {
        const PlantLTI p = oracle::random_plant(rng);
        const double T0 = uT(rng);
        const double lambda0 = std::exp(ul(rng));
        const StaticNonlinearity hill = hill_nonlinearity(ug(rng), uc(rng));

        // corridor taken from an exactly achievable cycle so the pipeline
        // always has a solution nearby
        const CorridorAnalysis ach = corridor_extrema(p, T0, lambda0);
        const CorridorSpec cs = resolve_corridor(
            corridor_from_measured(hill.eval(ach.y_bar_max), hill.eval(ach.y_bar_min)), hill);

        PeriodDesign pd;
        try {
            pd = design_period(p, cs, 0.5 * T0, 1.5 * T0);
        } catch (const Error&) {
            continue;  // ratio landed on a boundary of the reduced range
        }
        const double lambda = design_weight(p, pd.T, cs);
        const OneCycle cycle = one_cycle(p, pd.T, lambda);
        const ModulationBounds bounds{.Phi1 = 0.2 * pd.T, .Phi2 = 5.0 * pd.T,
                                      .F1 = 0.1 * lambda, .F2 = 10.0 * lambda};
        const double k4 = us(rng) * 0.05 * lambda / 100.0;
        const double k2 = -us(rng) * 0.05 * pd.T / 100.0;
        const ModulationConfig mod = synthesize_modulation(cycle, k2, k4, bounds, hill);

        const Vec3 x0{us(rng) * cycle.X[0], us(rng) * cycle.X[1], us(rng) * cycle.X[2]};
        const PlantStructure wiener{.linear = p, .output_nl = hill};
        const PlantStructure bare{.linear = p};
        const Trajectory a = simulate(wiener, mod.stripped(), x0, 12, pd.T / 40.0);
        const Trajectory b = simulate(bare, mod, x0, 12, pd.T / 40.0);

        REQUIRE(a.events.size() == b.events.size());
        for (std::size_t i = 0; i < a.events.size(); ++i) {
            CHECK(std::abs(a.events[i].t - b.events[i].t) <=
                  1e-10 * std::max(1.0, std::abs(b.events[i].t)));
            CHECK(std::abs(a.events[i].lambda - b.events[i].lambda) <=
                  1e-10 * std::max(1.0, b.events[i].lambda));
            CHECK(std::abs(a.events[i].T - b.events[i].T) <= 1e-10 * b.events[i].T);
            for (int j = 0; j < 3; ++j)
                CHECK(std::abs(a.events[i].state_post[j] - b.events[i].state_post[j]) <=
                      1e-10 * std::max(1.0, std::abs(b.events[i].state_post[j])));
        }
        // the two views report the same linear output, measured through
        // different stages
        REQUIRE(a.samples.size() == b.samples.size());
        for (std::size_t i = 0; i < a.samples.size(); ++i) {
            CHECK(a.samples[i].y_bar == b.samples[i].y_bar);
            CHECK(a.samples[i].y == Approx(hill.eval(b.samples[i].y_bar)).epsilon(1e-14));
        }

        check_zeno_and_positivity(a);
        check_zeno_and_positivity(b);
        ++done;
    }
}

TEST_CASE("random closed loops never fire early and never leave the orthant") {
    std::mt19937_64 rng(5541);
    std::uniform_real_distribution<double> uT(5.0, 30.0);
    std::uniform_real_distribution<double> ul(std::log(5.0), std::log(500.0));
    std::uniform_real_distribution<double> us(0.0, 1.0);

    for (int trial = 0; trial < 8; ++trial) {
        const PlantLTI p = oracle::random_plant(rng);
        const double T0 = uT(rng);
        const double lambda0 = std::exp(ul(rng));
        const OneCycle cycle = one_cycle(p, T0, lambda0);
        // deliberately tight clamps so trajectories actually hit them
        const ModulationBounds bounds{.Phi1 = 0.9 * T0, .Phi2 = 1.1 * T0,
                                      .F1 = 0.9 * lambda0, .F2 = 1.1 * lambda0};
        const double k4 = -us(rng) * lambda0 / std::max(1.0, 10.0 * cycle.y0);
        const double k2 = us(rng) * T0 / std::max(1.0, 10.0 * cycle.y0);
        const ModulationConfig mod = synthesize_modulation(cycle, k2, k4, bounds, std::nullopt);

        const Vec3 x0{us(rng), us(rng), us(rng)};
        const Trajectory traj = simulate({.linear = p}, mod, x0, 25, T0 / 20.0);
        check_zeno_and_positivity(traj);
    }
}
