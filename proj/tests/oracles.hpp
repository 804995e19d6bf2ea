#pragma once

// Reference implementations used only by the tests. They recompute the same
// quantities as the library through a different route (long double
// arithmetic, closed-form chain exponentials, brute-force sampling) so that
// agreement is evidence rather than tautology.

#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "igo/matrix.hpp"
#include "igo/plant.hpp"

namespace oracle {

// 1/expm1(-z) in long double.
inline long double mu(long double z) { return 1.0L / std::expm1(-z); }

// Divided differences of mu over distinct nodes, full triangle in long double.
template <std::size_t N>
long double mu_dd(const std::array<long double, N>& nodes) {
    std::array<long double, N> tab;
    for (std::size_t i = 0; i < N; ++i) tab[i] = mu(nodes[i]);
    for (std::size_t lvl = 1; lvl < N; ++lvl)
        for (std::size_t i = 0; i + lvl < N; ++i)
            tab[i] = (tab[i + 1] - tab[i]) / (nodes[i + lvl] - nodes[i]);
    return tab[0];
}

// Divided differences of exp over distinct nodes.
template <std::size_t N>
long double exp_dd(const std::array<long double, N>& nodes) {
    std::array<long double, N> tab;
    for (std::size_t i = 0; i < N; ++i) tab[i] = std::exp(nodes[i]);
    for (std::size_t lvl = 1; lvl < N; ++lvl)
        for (std::size_t i = 0; i + lvl < N; ++i)
            tab[i] = (tab[i + 1] - tab[i]) / (nodes[i + lvl] - nodes[i]);
    return tab[0];
}

// Closed-form e^{At} for the lower-bidiagonal chain realization with
// pairwise distinct rates. Entry (i, j) below the diagonal is the product of
// the connecting gains times t^(i-j) times a divided difference of exp over
// the eigenvalue arguments z_k = -a_k t.
inline igo::Mat3 chain_exp(const igo::PlantLTI& p, double t) {
    const long double z1 = -static_cast<long double>(p.a1) * t;
    const long double z2 = -static_cast<long double>(p.a2) * t;
    const long double z3 = -static_cast<long double>(p.a3) * t;
    const long double g1 = p.g1, g2 = p.g2, tl = t;

    igo::Mat3 e = igo::Mat3::zero();
    e(0, 0) = static_cast<double>(std::exp(z1));
    e(1, 1) = static_cast<double>(std::exp(z2));
    e(2, 2) = static_cast<double>(std::exp(z3));
    e(1, 0) = static_cast<double>(g1 * tl * exp_dd<2>({z1, z2}));
    e(2, 1) = static_cast<double>(g2 * tl * exp_dd<2>({z2, z3}));
    e(2, 0) = static_cast<double>(g1 * g2 * tl * tl * exp_dd<3>({z1, z2, z3}));
    return e;
}

// Fixed point of the cycle map, elementwise in long double.
inline igo::Vec3 chain_fixed_point(const igo::PlantLTI& p, double T, double lambda) {
    const long double z1 = -static_cast<long double>(p.a1) * T;
    const long double z2 = -static_cast<long double>(p.a2) * T;
    const long double z3 = -static_cast<long double>(p.a3) * T;
    const long double lam = lambda, g1 = p.g1, g2 = p.g2, Tl = T;
    igo::Vec3 x;
    x[0] = static_cast<double>(lam * mu(z1));
    x[1] = static_cast<double>(lam * g1 * Tl * mu_dd<2>({z1, z2}));
    x[2] = static_cast<double>(lam * g1 * g2 * Tl * Tl * mu_dd<3>({z1, z2, z3}));
    return x;
}

// Brute-force corridor bounds: dense uniform sampling of the cycle output
// using the closed-form one-step propagator. Endpoint samples are excluded;
// interior extrema dominate them for the plants under test.
struct SampledBounds {
    double lo;
    double hi;
};

inline SampledBounds sample_cycle_output(const igo::PlantLTI& p, double T, double lambda,
                                         const igo::Vec3& w, int n_samples) {
    const igo::Mat3 e_h = chain_exp(p, T / n_samples);
    igo::Vec3 u = w;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int i = 1; i < n_samples; ++i) {
        u = e_h * u;
        const double y = lambda * p.C.dot(u);
        lo = std::min(lo, y);
        hi = std::max(hi, y);
    }
    return {lo, hi};
}

// Random chain plants with comfortably separated rates. Deterministic for a
// given engine state.
inline igo::PlantLTI random_plant(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> log_rate(std::log(0.02), std::log(1.0));
    std::uniform_real_distribution<double> log_gain(std::log(0.05), std::log(5.0));
    for (;;) {
        const double a1 = std::exp(log_rate(rng));
        const double a2 = std::exp(log_rate(rng));
        const double a3 = std::exp(log_rate(rng));
        const double sep = 1e-3;
        if (std::abs(a1 - a2) < sep * std::max(a1, a2)) continue;
        if (std::abs(a1 - a3) < sep * std::max(a1, a3)) continue;
        if (std::abs(a2 - a3) < sep * std::max(a2, a3)) continue;
        return igo::plant_from_chain(a1, a2, a3, std::exp(log_gain(rng)),
                                     std::exp(log_gain(rng)));
    }
}

// ---------------------------------------------------------------------------
// Values frozen from a high-precision reference computation. The library
// must reproduce them through its own arithmetic.
// ---------------------------------------------------------------------------

// Muscle-relaxant parameterization at alpha = 0.0374.
inline constexpr double kAlpha = 0.0374;
inline constexpr double kGamma = 2.6677;
inline constexpr double kC50 = 3.2425;
inline constexpr double kA[3] = {0.0374, 0.1496, 0.374};
inline constexpr double kG1 = 0.0374;
inline constexpr double kG2 = 0.0559504;

// Dose-response values.
inline constexpr double kPhiAt7p3889 = 10.000139713481094;
inline constexpr double kPhiAt13p9463 = 1.9999879625875228;
inline constexpr double kPhiPrimeAt7p4309 = -3.192133782216573;
inline constexpr double kPhiInv2 = 13.946267892989818;
inline constexpr double kPhiInv10 = 7.388942996902612;

// Design instance: corridor 2..10 on the measured side.
inline constexpr double kYbarMin = 7.3889429969026119;
inline constexpr double kYbarMax = 13.946267892989818;
inline constexpr double kTStar = 37.383386891408364;       // exact ratio match
inline constexpr double kLambdaStar = 415.84118214856711;  // weight at kTStar

// Cycle quantities at the rounded reference operating point
// T = 37.3834, lambda = 415.8412.
inline constexpr double kTRef = 37.3834;
inline constexpr double kLambdaRef = 415.8412;
inline constexpr double kXRef[3] = {136.44601972924454, 44.963671315475064,
                                    7.4308917052940349};
inline constexpr double kTauMinRef = 0.32876230096557045;   // argmax of the output
inline constexpr double kTauMaxRef = 13.070622041053029;    // argmin side boundary
inline constexpr double kYbarMinRef = 7.3889386938000831;   // achieved extrema
inline constexpr double kYbarMaxRef = 13.946265508473745;
inline constexpr double kXiRef = 9.8648979200240683;        // phi(y0) at the cycle
inline constexpr double kK3Ref = 415.53242869510325;        // offsets solved at the
inline constexpr double kK1Ref = 38.310700404482262;        // pinned reference slopes
inline constexpr double kPhiPrimeY0Ref = -3.1921449755802020;
inline constexpr double kMultipliersRef[3] = {0.15744738175932897, 0.012956443101804931,
                                              3.5201155198600252e-7};
inline constexpr double kMultipliersZeroSlopeRef[3] = {
    0.24705626864973695, 0.0037254909394850853, 8.4714700307857700e-7};
inline constexpr double kMu1Ref = 0.32812049342211531;      // mu(-a1 T)
inline constexpr double kMuDd2Ref = 0.077336381713580192;   // mu[z1, z2]
inline constexpr double kMuDd3Ref = 0.0061105601489912631;  // mu[z1, z2, z3]

// Reference slopes, four-decimal precision the design pins.
inline constexpr double kK2Ref = -0.0940;
inline constexpr double kK4Ref = 0.0313;

// Scalar special-function values.
inline constexpr double kMuAtMinus50 = 1.9287498479639178e-22;
inline constexpr double kMuAt0p7 = -1.9864338636344634;
inline constexpr double kMuAtMinus2p5 = 0.08942548983385201;
inline constexpr double kMu1At0p7 = 1.9594856309592783;
inline constexpr double kMu1AtMinus2p5 = 0.09742240806587639;
inline constexpr double kMu2At0p7 = -5.825291594326028;
inline constexpr double kMu2AtMinus2p5 = 0.1148465011900452;
inline constexpr double kMuDdM03M17 = 1.881985464946611;
inline constexpr double kMuDdM05M125M30 = 0.5281626272229506;
inline constexpr double kMuDdConfluent3 = -0.9961473805592373;  // nodes 1, 1+1e-9, 1+2e-9
inline constexpr double kMuDdConfluent2 = 0.920673593211645;    // nodes 1, 1+1e-9

}  // namespace oracle
