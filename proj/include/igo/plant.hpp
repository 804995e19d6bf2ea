#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "igo/error.hpp"
#include "igo/matrix.hpp"
#include "igo/numerics.hpp"

namespace igo {

/// Chain-structured positive third-order plant
///   dx/dt = Ax,  A = [[-a1,0,0],[g1,-a2,0],[0,g2,-a3]],  B = (1,0,0),  C = (0,0,1).
/// The rates a1, a2, a3 must be positive and pairwise distinct; CB = 0 keeps
/// the output continuous across dose jumps.
struct PlantLTI {
    double a1 = 0.0, a2 = 0.0, a3 = 0.0;
    double g1 = 0.0, g2 = 0.0;
    Mat3 A = Mat3::zero();
    Vec3 B = Vec3::zero();
    Vec3 C = Vec3::zero();  // stored as a row vector: y = C . x

    [[nodiscard]] double output(const Vec3& x) const { return C.dot(x); }
};

inline constexpr double kRateDistinctnessRel = 1e-9;

/// Validates the chain parameters and realizes A, B, C. Arbitrary dense A is
/// outside the supported model class.
inline PlantLTI plant_from_chain(double a1, double a2, double a3, double g1, double g2) {
    for (double v : {a1, a2, a3, g1, g2})
        if (!std::isfinite(v) || v <= 0.0)
            raise(Errc::validation, "plant_from_chain: rates and gains must be finite and > 0");
    const double pairs[3][2] = {{a1, a2}, {a1, a3}, {a2, a3}};
    for (const auto& p : pairs)
        if (std::abs(p[0] - p[1]) <= kRateDistinctnessRel * std::max(p[0], p[1]))
            raise(Errc::validation, "plant_from_chain: rates a1, a2, a3 must be pairwise distinct");

    PlantLTI plant;
    plant.a1 = a1;
    plant.a2 = a2;
    plant.a3 = a3;
    plant.g1 = g1;
    plant.g2 = g2;
    plant.A(0, 0) = -a1;
    plant.A(1, 0) = g1;
    plant.A(1, 1) = -a2;
    plant.A(2, 1) = g2;
    plant.A(2, 2) = -a3;
    plant.B = Vec3::unit(0);
    plant.C = Vec3::unit(2);
    return plant;
}

/// Steady-state gain C(-A)^{-1}B; equals g1 g2/(a1 a2 a3) for the chain.
inline double dc_gain(const PlantLTI& plant) {
    return plant.g1 * plant.g2 / (plant.a1 * plant.a2 * plant.a3);
}

/// Mean-population neuromuscular blockade model: one patient-specific rate
/// scale alpha and a fixed pole spread (1, 4, 10), plus the Hill output map.
/// u_max bounds the continuous infusion the model was identified with; the
/// impulsive scheme does not consume it, so it is carried as information only.
struct NmbParams {
    double alpha = 0.0;  // 0 < alpha <= 0.1
    double v1 = 1.0, v2 = 4.0, v3 = 10.0;
    double gamma = 0.0;  // Hill exponent, 0 < gamma <= 10
    double c50 = 0.0;    // half-effect concentration, ug/ml
    std::optional<double> u_max;
};

/// a_i = v_i alpha; g1 = v1 alpha; g2 = v2 v3 alpha^2. The gains cancel the
/// pole product, so the realized plant always has unit steady-state gain.
inline PlantLTI plant_from_nmb(const NmbParams& p) {
    if (!(p.alpha > 0.0) || !(p.alpha <= 0.1))
        raise(Errc::validation, "plant_from_nmb: alpha must lie in (0, 0.1]");
    for (double v : {p.v1, p.v2, p.v3})
        if (!std::isfinite(v) || v <= 0.0)
            raise(Errc::validation, "plant_from_nmb: pole multipliers must be > 0");
    return plant_from_chain(p.v1 * p.alpha, p.v2 * p.alpha, p.v3 * p.alpha, p.v1 * p.alpha,
                            p.v2 * p.v3 * p.alpha * p.alpha);
}

// ---------------------------------------------------------------------------
// Static nonlinearities (Wiener output maps, Hammerstein input maps)
// ---------------------------------------------------------------------------

enum class NlKind { identity, hill, power, table };

/// Strictly monotone scalar map with consistent eval/inverse/derivative.
///   identity: x
///   hill:     100 c50^g / (c50^g + x^g) on x >= 0, decreasing onto (0, 100]
///   power:    scale * x^p on x >= 0, increasing
///   table:    piecewise-linear through strictly monotone breakpoints
struct StaticNonlinearity {
    NlKind kind = NlKind::identity;
    double gamma = 0.0, c50 = 0.0;          // hill
    double exponent = 1.0, scale = 1.0;     // power
    std::vector<double> xs, ys;             // table, xs strictly increasing
    bool increasing_ = true;

    [[nodiscard]] bool increasing() const { return increasing_; }

    [[nodiscard]] double eval(double x) const {
        switch (kind) {
            case NlKind::identity:
                return x;
            case NlKind::hill: {
                if (!(x >= 0.0)) raise(Errc::domain, "hill: concentration must be >= 0");
                const double cg = std::pow(c50, gamma);
                return 100.0 * cg / (cg + std::pow(x, gamma));
            }
            case NlKind::power: {
                if (!(x >= 0.0)) raise(Errc::domain, "power nonlinearity: argument must be >= 0");
                return scale * std::pow(x, exponent);
            }
            case NlKind::table: {
                if (!(x >= xs.front()) || !(x <= xs.back()))
                    raise(Errc::domain, "table nonlinearity: argument outside breakpoint range");
                const auto it = std::upper_bound(xs.begin(), xs.end(), x);
                const std::size_t i = std::min(xs.size() - 2,
                                               static_cast<std::size_t>(
                                                   std::max<std::ptrdiff_t>(0, it - xs.begin() - 1)));
                const double w = (x - xs[i]) / (xs[i + 1] - xs[i]);
                return ys[i] + w * (ys[i + 1] - ys[i]);
            }
        }
        raise(Errc::internal, "nonlinearity: unknown kind");
    }

    [[nodiscard]] double inverse(double y) const {
        switch (kind) {
            case NlKind::identity:
                return y;
            case NlKind::hill:
                if (!(y > 0.0) || !(y <= 100.0))
                    raise(Errc::domain, "hill inverse: effect must lie in (0, 100]");
                return c50 * std::pow(100.0 / y - 1.0, 1.0 / gamma);
            case NlKind::power:
                if (!(y / scale >= 0.0))
                    raise(Errc::domain, "power inverse: target outside range");
                return std::pow(y / scale, 1.0 / exponent);
            case NlKind::table: {
                const double ylo = increasing_ ? ys.front() : ys.back();
                const double yhi = increasing_ ? ys.back() : ys.front();
                if (!(y >= ylo) || !(y <= yhi))
                    raise(Errc::domain, "table inverse: target outside table range");
                // Reflect the table: ys is strictly monotone, so each segment
                // inverts linearly.
                for (std::size_t i = 0; i + 1 < ys.size(); ++i) {
                    const double lo = std::min(ys[i], ys[i + 1]);
                    const double hi = std::max(ys[i], ys[i + 1]);
                    if (y >= lo && y <= hi) {
                        const double w = (y - ys[i]) / (ys[i + 1] - ys[i]);
                        return xs[i] + w * (xs[i + 1] - xs[i]);
                    }
                }
                raise(Errc::internal, "table inverse: no containing segment");
            }
        }
        raise(Errc::internal, "nonlinearity: unknown kind");
    }

    [[nodiscard]] double derivative(double x) const {
        switch (kind) {
            case NlKind::identity:
                return 1.0;
            case NlKind::hill: {
                if (!(x >= 0.0)) raise(Errc::domain, "hill derivative: concentration must be >= 0");
                if (x == 0.0) {
                    if (gamma < 1.0)
                        raise(Errc::domain, "hill derivative: unbounded at 0 for gamma < 1");
                    return gamma == 1.0 ? -100.0 / c50 : 0.0;
                }
                const double cg = std::pow(c50, gamma);
                const double xg = std::pow(x, gamma);
                const double denom = (cg + xg) * (cg + xg);
                return -gamma * 100.0 * cg * std::pow(x, gamma - 1.0) / denom;
            }
            case NlKind::power:
                if (!(x >= 0.0)) raise(Errc::domain, "power derivative: argument must be >= 0");
                if (x == 0.0 && exponent < 1.0)
                    raise(Errc::domain, "power derivative: unbounded at 0 for exponent < 1");
                return scale * exponent * std::pow(x, exponent - 1.0);
            case NlKind::table: {
                if (!(x >= xs.front()) || !(x <= xs.back()))
                    raise(Errc::domain, "table derivative: argument outside breakpoint range");
                const auto it = std::upper_bound(xs.begin(), xs.end(), x);
                const std::size_t i = std::min(xs.size() - 2,
                                               static_cast<std::size_t>(
                                                   std::max<std::ptrdiff_t>(0, it - xs.begin() - 1)));
                return (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
            }
        }
        raise(Errc::internal, "nonlinearity: unknown kind");
    }
};

inline StaticNonlinearity identity_nonlinearity() { return {}; }

inline StaticNonlinearity hill_nonlinearity(double gamma, double c50) {
    if (!(gamma > 0.0) || !(gamma <= 10.0))
        raise(Errc::validation, "hill_nonlinearity: gamma must lie in (0, 10]");
    if (!(c50 > 0.0)) raise(Errc::validation, "hill_nonlinearity: c50 must be > 0");
    StaticNonlinearity nl;
    nl.kind = NlKind::hill;
    nl.gamma = gamma;
    nl.c50 = c50;
    nl.increasing_ = false;
    return nl;
}

inline StaticNonlinearity power_nonlinearity(double exponent, double scale = 1.0) {
    if (!(exponent > 0.0)) raise(Errc::validation, "power_nonlinearity: exponent must be > 0");
    if (!(scale > 0.0)) raise(Errc::validation, "power_nonlinearity: scale must be > 0");
    StaticNonlinearity nl;
    nl.kind = NlKind::power;
    nl.exponent = exponent;
    nl.scale = scale;
    return nl;
}

inline StaticNonlinearity table_nonlinearity(std::vector<double> xs, std::vector<double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        raise(Errc::validation, "table_nonlinearity: need matching lists of >= 2 breakpoints");
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
        if (!(xs[i] < xs[i + 1]))
            raise(Errc::validation, "table_nonlinearity: abscissae must be strictly increasing");
    const bool inc = ys[1] > ys[0];
    for (std::size_t i = 0; i + 1 < ys.size(); ++i)
        if (inc ? !(ys[i] < ys[i + 1]) : !(ys[i] > ys[i + 1]))
            raise(Errc::validation, "table_nonlinearity: ordinates must be strictly monotone");
    StaticNonlinearity nl;
    nl.kind = NlKind::table;
    nl.xs = std::move(xs);
    nl.ys = std::move(ys);
    nl.increasing_ = inc;
    return nl;
}

// Named operations over the Hill map. They insist on the Hill kind so that a
// config wiring error surfaces as a validation failure, not a wrong number.
inline double hill_eval(const StaticNonlinearity& nl, double x) {
    if (nl.kind != NlKind::hill) raise(Errc::validation, "hill_eval: not a Hill nonlinearity");
    return nl.eval(x);
}

inline double hill_inverse(const StaticNonlinearity& nl, double y) {
    if (nl.kind != NlKind::hill) raise(Errc::validation, "hill_inverse: not a Hill nonlinearity");
    return nl.inverse(y);
}

inline double hill_derivative(const StaticNonlinearity& nl, double x) {
    if (nl.kind != NlKind::hill)
        raise(Errc::validation, "hill_derivative: not a Hill nonlinearity");
    return nl.derivative(x);
}

/// Solves nl(x) = target by bisection on [lo, hi], assuming nl is strictly
/// monotone there. Used for dose computation when the input map has no
/// closed-form inverse.
inline double invert_nonlinearity_numeric(const StaticNonlinearity& nl, double target, double lo,
                                          double hi) {
    if (!(lo < hi)) raise(Errc::domain, "invert_nonlinearity_numeric: requires lo < hi");
    double flo = nl.eval(lo);
    double fhi = nl.eval(hi);
    const double fmin = std::min(flo, fhi);
    const double fmax = std::max(flo, fhi);
    if (target < fmin || target > fmax)
        raise(Errc::unreachable_dose,
              "invert_nonlinearity_numeric: target " + std::to_string(target) +
                  " outside attainable range [" + std::to_string(fmin) + ", " +
                  std::to_string(fmax) + "]");
    if (target == flo) return lo;
    if (target == fhi) return hi;
    const bool inc = fhi > flo;
    double a = lo, b = hi;
    // Bisect to the last representable interval; 200 iterations cap runaway
    // loops if the map is flat to machine precision.
    for (int it = 0; it < 200 && a < b; ++it) {
        const double mid = 0.5 * (a + b);
        if (mid == a || mid == b) break;
        const double fm = nl.eval(mid);
        if (fm == target) return mid;
        if ((fm < target) == inc)
            a = mid;
        else
            b = mid;
    }
    return 0.5 * (a + b);
}

/// The simulated loop: the linear core plus optional dose-side (Hammerstein)
/// and measurement-side (Wiener) static maps.
struct PlantStructure {
    PlantLTI linear;
    std::optional<StaticNonlinearity> input_nl;   // maps commanded dose to delivered dose
    std::optional<StaticNonlinearity> output_nl;  // maps linear output to measured output

    [[nodiscard]] double measured_output(const Vec3& x) const {
        const double ybar = linear.output(x);
        return output_nl ? output_nl->eval(ybar) : ybar;
    }
};

}  // namespace igo
