#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "igo/cycle.hpp"
#include "igo/error.hpp"
#include "igo/matrix.hpp"
#include "igo/numerics.hpp"
#include "igo/plant.hpp"

namespace igo {

enum class CorridorGiven { measured, linear };

/// Output corridor request. Bounds can be stated on the measured output
/// (after a Wiener map) or directly on the linear output; resolve_corridor
/// fills the missing pair so the design pipeline always works on linear
/// bounds.
struct CorridorSpec {
    CorridorGiven which_given = CorridorGiven::linear;
    double y_min = 0.0;
    double y_max = 0.0;
    double y_bar_min = 0.0;
    double y_bar_max = 0.0;
};

inline CorridorSpec corridor_from_linear(double lo, double hi) {
    if (!(lo > 0.0) || !(lo < hi))
        raise(Errc::validation, "corridor: requires 0 < lower bound < upper bound");
    CorridorSpec cs;
    cs.which_given = CorridorGiven::linear;
    cs.y_bar_min = lo;
    cs.y_bar_max = hi;
    return cs;
}

inline CorridorSpec corridor_from_measured(double lo, double hi) {
    if (!(lo > 0.0) || !(lo < hi))
        raise(Errc::validation, "corridor: requires 0 < lower bound < upper bound");
    CorridorSpec cs;
    cs.which_given = CorridorGiven::measured;
    cs.y_min = lo;
    cs.y_max = hi;
    return cs;
}

/// Completes the corridor description through the measurement map.
/// A decreasing map sends the upper measured bound to the lower linear
/// bound and vice versa.
inline CorridorSpec resolve_corridor(CorridorSpec cs,
                                     const std::optional<StaticNonlinearity>& output_nl) {
    const StaticNonlinearity nl = output_nl.value_or(identity_nonlinearity());
    if (cs.which_given == CorridorGiven::measured) {
        if (nl.increasing()) {
            cs.y_bar_min = nl.inverse(cs.y_min);
            cs.y_bar_max = nl.inverse(cs.y_max);
        } else {
            cs.y_bar_min = nl.inverse(cs.y_max);
            cs.y_bar_max = nl.inverse(cs.y_min);
        }
    } else {
        if (nl.increasing()) {
            cs.y_min = nl.eval(cs.y_bar_min);
            cs.y_max = nl.eval(cs.y_bar_max);
        } else {
            cs.y_min = nl.eval(cs.y_bar_max);
            cs.y_max = nl.eval(cs.y_bar_min);
        }
    }
    if (!(cs.y_bar_min > 0.0) || !(cs.y_bar_min < cs.y_bar_max))
        raise(Errc::validation, "corridor: mapped linear bounds fail 0 < min < max");
    return cs;
}

// ---------------------------------------------------------------------------
// Modulation functions
// ---------------------------------------------------------------------------

/// Clamp limits for the two modulation maps. The positive lower period bound
/// excludes Zeno firing patterns outright.
struct ModulationBounds {
    double Phi1 = 0.0, Phi2 = 0.0;  // period clamp
    double F1 = 0.0, F2 = 0.0;      // dose clamp
};

inline void validate_bounds(const ModulationBounds& b) {
    if (!(b.Phi1 > 0.0) || !(b.Phi1 <= b.Phi2))
        raise(Errc::validation, "modulation bounds: require 0 < Phi1 <= Phi2");
    if (!(b.F1 > 0.0) || !(b.F1 <= b.F2))
        raise(Errc::validation, "modulation bounds: require 0 < F1 <= F2");
}

/// Clamped affine modulation maps
///   period(v) = clamp(k1 + k2 w(v)),  dose(v) = clamp(k3 + k4 w(v)),
/// where w is output_nl when present, identity otherwise. Set output_nl when
/// the simulated plant structure does not itself produce the mapped signal;
/// a structure that already applies the same map must be paired with the
/// stripped (affine-only) form or the map would act twice.
struct ModulationConfig {
    double k1 = 0.0, k2 = 0.0;  // period offset and slope
    double k3 = 0.0, k4 = 0.0;  // dose offset and slope
    ModulationBounds bounds;
    std::optional<StaticNonlinearity> output_nl;

    [[nodiscard]] double argument(double v) const {
        return output_nl ? output_nl->eval(v) : v;
    }
    [[nodiscard]] double period(double v) const {
        return std::clamp(k1 + k2 * argument(v), bounds.Phi1, bounds.Phi2);
    }
    [[nodiscard]] double dose(double v) const {
        return std::clamp(k3 + k4 * argument(v), bounds.F1, bounds.F2);
    }
    /// Copy with the composition map removed, for driving a structure that
    /// applies the map itself.
    [[nodiscard]] ModulationConfig stripped() const {
        ModulationConfig m = *this;
        m.output_nl.reset();
        return m;
    }
};

// ---------------------------------------------------------------------------
// Period and weight selection
// ---------------------------------------------------------------------------

struct SweepPoint {
    double T = 0.0;
    double ratio = 0.0;  // z_max / (z_max - z_min) at this period
};

struct PeriodDesign {
    double T = 0.0;
    double ratio_residual = 0.0;
    std::vector<SweepPoint> sweep;
};

namespace detail {

template <class F>
double golden_min(F&& f, double a, double b, double tol) {
    constexpr double invphi = 0.6180339887498949;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    while (b - a > tol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace detail

inline constexpr int kDesignGridDefault = 256;
// Refinement width over the T range. Tight enough that the returned period
// is stable to well below the fourth decimal on a span of tens of time
// units; the extra golden-section steps cost microseconds.
inline constexpr double kDesignRefineRel = 1e-6;
inline constexpr double kRatioResidualCap = 0.02;  // beyond this the corridor is unreachable

/// Selects the cycle period whose output-extrema ratio z_max/(z_max - z_min)
/// matches the requested y_bar_max/(y_bar_max - y_bar_min). The ratio does
/// not depend on the weight, so the sweep runs at unit weight; a uniform
/// grid localizes the argmin (smallest period on ties) and golden-section
/// descent refines it.
inline PeriodDesign design_period(const PlantLTI& plant, const CorridorSpec& spec, double T_min,
                                  double T_max, int grid_n = kDesignGridDefault,
                                  double residual_cap = kRatioResidualCap,
                                  const NumericsSettings& ns = {}) {
    if (!(T_min > 0.0) || !(T_min < T_max))
        raise(Errc::domain, "design_period: requires 0 < T_min < T_max");
    if (grid_n < 8) raise(Errc::domain, "design_period: requires grid_n >= 8");
    if (!(spec.y_bar_min > 0.0) || !(spec.y_bar_min < spec.y_bar_max))
        raise(Errc::validation, "design_period: corridor lacks resolved linear bounds");

    const double target = spec.y_bar_max / (spec.y_bar_max - spec.y_bar_min);
    const auto ratio_at = [&](double T) {
        const CorridorAnalysis ca = corridor_extrema(plant, T, 1.0, ns);
        return ca.y_bar_max / (ca.y_bar_max - ca.y_bar_min);
    };
    const auto residual_at = [&](double T) {
        // Isolated analysis failures on extreme grid periods count as
        // infeasible rather than aborting the sweep.
        try {
            return std::abs(target - ratio_at(T));
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    PeriodDesign pd;
    pd.sweep.reserve(static_cast<std::size_t>(grid_n));
    int best = -1;
    double best_res = std::numeric_limits<double>::infinity();
    for (int j = 0; j < grid_n; ++j) {
        const double T = T_min + (T_max - T_min) * j / (grid_n - 1);
        double ratio = std::numeric_limits<double>::quiet_NaN();
        try {
            ratio = ratio_at(T);
        } catch (const Error&) {
        }
        pd.sweep.push_back({T, ratio});
        const double res = std::isfinite(ratio) ? std::abs(target - ratio)
                                                : std::numeric_limits<double>::infinity();
        if (res < best_res) {
            best_res = res;
            best = j;
        }
    }
    if (best < 0) raise(Errc::analysis, "design_period: extrema analysis failed on every period");

    const double h = (T_max - T_min) / (grid_n - 1);
    const double lo = std::max(T_min, pd.sweep[static_cast<std::size_t>(best)].T - h);
    const double hi = std::min(T_max, pd.sweep[static_cast<std::size_t>(best)].T + h);
    pd.T = detail::golden_min(residual_at, lo, hi, kDesignRefineRel * (T_max - T_min));
    pd.ratio_residual = residual_at(pd.T);

    if (!(pd.ratio_residual <= residual_cap))
        raise(Errc::unreachable_corridor,
              "design_period: best ratio residual " + std::to_string(pd.ratio_residual) +
                  " exceeds cap " + std::to_string(residual_cap) +
                  "; the corridor shape is not achievable on the given period range");
    return pd;
}

/// Weight that stretches the unit-weight extrema onto the requested corridor,
/// lambda = (y_bar_max - y_bar_min)/(z_max - z_min).
inline double design_weight(const PlantLTI& plant, double T, const CorridorSpec& spec,
                            const NumericsSettings& ns = {}) {
    if (!(spec.y_bar_min > 0.0) || !(spec.y_bar_min < spec.y_bar_max))
        raise(Errc::validation, "design_weight: corridor lacks resolved linear bounds");
    const CorridorAnalysis ca = corridor_extrema(plant, T, 1.0, ns);
    const double width = ca.y_bar_max - ca.y_bar_min;
    if (!(width > 0.0))
        raise(Errc::degenerate_points, "design_weight: flat unit-weight output, cannot scale");
    return (spec.y_bar_max - spec.y_bar_min) / width;
}

// ---------------------------------------------------------------------------
// Modulation synthesis and orbital stability
// ---------------------------------------------------------------------------

/// Offsets are fixed by requiring the unclamped affine maps to pass through
/// the cycle: dose(y0) = lambda and period(y0) = T. Slope signs must make
/// the composed dose map non-increasing and the composed period map
/// non-decreasing in the linear output, which is what keeps the feedback
/// contracting.
inline ModulationConfig synthesize_modulation(const OneCycle& cycle, double k2, double k4,
                                              const ModulationBounds& bounds,
                                              const std::optional<StaticNonlinearity>& output_nl) {
    validate_bounds(bounds);
    const bool arg_increasing = !output_nl || output_nl->increasing();
    if (arg_increasing ? (k4 > 0.0 || k2 < 0.0) : (k4 < 0.0 || k2 > 0.0))
        raise(Errc::validation,
              "synthesize_modulation: slope signs break the required monotonicity");

    ModulationConfig mod;
    mod.k2 = k2;
    mod.k4 = k4;
    mod.bounds = bounds;
    mod.output_nl = output_nl;

    const double xi0 = mod.argument(cycle.y0);
    mod.k3 = cycle.lambda - k4 * xi0;
    mod.k1 = cycle.T - k2 * xi0;

    if (!(cycle.lambda > bounds.F1) || !(cycle.lambda < bounds.F2))
        raise(Errc::saturation,
              "synthesize_modulation: design dose sits on or outside the dose clamp");
    if (!(cycle.T > bounds.Phi1) || !(cycle.T < bounds.Phi2))
        raise(Errc::saturation,
              "synthesize_modulation: design period sits on or outside the period clamp");
    return mod;
}

/// Orbital stability data for the cycle under the given modulation: the
/// firing-to-firing Jacobian e^{AT} + K C, its multipliers, and the derived
/// flags. All multipliers real and positive additionally makes the
/// firing-time output sequence converge monotonically.
struct StabilityReport {
    Mat3 jacobian = Mat3::zero();
    Vec3 K = Vec3::zero();
    Vec3 J = Vec3::zero();  // e^{AT}B
    Vec3 D = Vec3::zero();  // AX
    std::array<std::complex<double>, 3> multipliers{};
    double spectral_radius = 0.0;
    bool stable = false;
    bool monotone_convergence = false;
};

inline StabilityReport stability_report(const PlantLTI& plant, const OneCycle& cycle,
                                        const ModulationConfig& mod) {
    const double xi0 = mod.argument(cycle.y0);
    const double dose0 = mod.k3 + mod.k4 * xi0;
    const double period0 = mod.k1 + mod.k2 * xi0;
    const double tol_dose = 1e-9 * std::max(1.0, std::abs(cycle.lambda));
    const double tol_period = 1e-9 * std::max(1.0, std::abs(cycle.T));
    if (std::abs(dose0 - cycle.lambda) > tol_dose || std::abs(period0 - cycle.T) > tol_period)
        raise(Errc::validation, "stability_report: modulation does not pass through the cycle");
    if (!(dose0 > mod.bounds.F1) || !(dose0 < mod.bounds.F2) || !(period0 > mod.bounds.Phi1) ||
        !(period0 < mod.bounds.Phi2))
        raise(Errc::saturation,
              "stability_report: cycle sits in a clamped segment, derivatives vanish there");

    // Slopes of the composed maps with respect to the linear output.
    const double chain = mod.output_nl ? mod.output_nl->derivative(cycle.y0) : 1.0;
    const double dF = mod.k4 * chain;
    const double dPhi = mod.k2 * chain;

    StabilityReport r;
    const Mat3 eAT = mat_exp(plant.A, cycle.T);
    r.J = eAT * plant.B;
    r.D = plant.A * cycle.X;
    r.K = dF * r.J + dPhi * r.D;

    r.jacobian = eAT;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r.jacobian(i, j) += r.K[i] * plant.C[j];

    r.multipliers = eigenvalues(r.jacobian);
    r.spectral_radius = spectral_radius<3>(r.multipliers);
    r.stable = r.spectral_radius < 1.0;
    r.monotone_convergence = true;
    for (const auto& m : r.multipliers) {
        const bool real_positive =
            m.real() > 0.0 && std::abs(m.imag()) <= 1e-12 * std::max(1.0, std::abs(m.real()));
        if (!real_positive) r.monotone_convergence = false;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Slope selection
// ---------------------------------------------------------------------------

struct SlopeChoice {
    double k2 = 0.0;
    double k4 = 0.0;
    double rho = 0.0;  // spectral radius at the chosen slopes
};

namespace detail {

// Grid values for one slope axis: zero (when an endpoint is zero) plus
// log-spaced magnitudes. The interval must not straddle zero; slope signs
// are fixed by the monotonicity requirement.
inline std::vector<double> slope_axis(double lo, double hi, int n) {
    if (!(lo <= hi)) raise(Errc::domain, "slope_search: axis requires lo <= hi");
    if (lo < 0.0 && hi > 0.0)
        raise(Errc::validation, "slope_search: axis straddles zero, sign is ambiguous");
    if (lo == hi) return {lo};

    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(n));
    const double sign = (hi > 0.0) ? 1.0 : -1.0;
    const double m_hi = std::max(std::abs(lo), std::abs(hi));
    double m_lo = std::min(std::abs(lo), std::abs(hi));
    if (m_lo == 0.0) {
        vals.push_back(0.0);
        m_lo = 1e-4 * m_hi;
        --n;
    }
    for (int i = 0; i < n; ++i) {
        // Endpoints are emitted verbatim so a range built around a known
        // good slope pair contains that exact pair.
        double mag;
        if (i == 0) mag = m_lo;
        else if (i == n - 1) mag = m_hi;
        else mag = m_lo * std::pow(m_hi / m_lo, static_cast<double>(i) / (n - 1));
        vals.push_back(sign * mag);
    }
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    return vals;
}

}  // namespace detail

inline constexpr int kSlopeAxisDefault = 33;

/// Grid search over candidate slope pairs, minimizing the spectral radius of
/// the cycle Jacobian. Ties go to the smaller |k2| + |k4| so the gentlest
/// feedback wins among equals.
inline SlopeChoice slope_search(const PlantLTI& plant, const OneCycle& cycle,
                                const ModulationBounds& bounds,
                                const std::optional<StaticNonlinearity>& output_nl,
                                std::pair<double, double> k2_range,
                                std::pair<double, double> k4_range,
                                int axis_n = kSlopeAxisDefault) {
    const bool arg_increasing = !output_nl || output_nl->increasing();
    if (arg_increasing ? (k4_range.second > 0.0 || k2_range.first < 0.0)
                       : (k4_range.first < 0.0 || k2_range.second > 0.0))
        raise(Errc::validation, "slope_search: slope ranges break the required monotonicity");

    const auto k2s = detail::slope_axis(k2_range.first, k2_range.second, axis_n);
    const auto k4s = detail::slope_axis(k4_range.first, k4_range.second, axis_n);

    SlopeChoice best;
    double best_rho = std::numeric_limits<double>::infinity();
    double best_size = std::numeric_limits<double>::infinity();
    for (double k2 : k2s) {
        for (double k4 : k4s) {
            const ModulationConfig mod = synthesize_modulation(cycle, k2, k4, bounds, output_nl);
            const double rho = stability_report(plant, cycle, mod).spectral_radius;
            const double size = std::abs(k2) + std::abs(k4);
            if (rho < best_rho || (rho == best_rho && size < best_size)) {
                best_rho = rho;
                best_size = size;
                best = {k2, k4, rho};
            }
        }
    }
    if (!(best_rho < 1.0))
        raise(Errc::no_stabilizing_slopes,
              "slope_search: no grid point yields a spectral radius below 1");
    return best;
}

}  // namespace igo
