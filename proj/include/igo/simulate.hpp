#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "igo/cycle.hpp"
#include "igo/design.hpp"
#include "igo/error.hpp"
#include "igo/matrix.hpp"
#include "igo/numerics.hpp"
#include "igo/plant.hpp"

namespace igo {

/// One controller firing. lambda is the commanded dose (the solution of the
/// input-map inversion when one is configured); the state jump actually
/// applied is state_post - state_pre, which equals lambda only without an
/// input map.
struct FiringEvent {
    int n = 0;
    double t = 0.0;
    double y_at_fire = 0.0;      // measured output at the firing instant
    double y_bar_at_fire = 0.0;  // linear output at the firing instant
    double lambda = 0.0;         // commanded dose
    double T = 0.0;              // scheduled interval to the next firing
    Vec3 state_pre = Vec3::zero();
    Vec3 state_post = Vec3::zero();
};

struct TrajectorySample {
    double t = 0.0;
    Vec3 state = Vec3::zero();
    double y_bar = 0.0;
    double y = 0.0;
};

/// Full closed-loop run: the exact event sequence plus a decorative fixed-step
/// sampling of the flow. The inputs are snapshotted so a report can echo the
/// run configuration.
struct Trajectory {
    PlantStructure structure;
    ModulationConfig mod;
    Vec3 x0 = Vec3::zero();
    double sample_dt = 0.0;
    std::vector<FiringEvent> events;
    std::vector<TrajectorySample> samples;

    [[nodiscard]] double end_time() const {
        return events.empty() ? 0.0 : events.back().t + events.back().T;
    }
};

namespace detail {

// Doses repeat almost exactly once the loop settles, so e^{AT} for the
// recurring interval is cached; quantizing at 1e-12 s keeps distinct clamp
// outputs from aliasing.
class ExpCache {
  public:
    explicit ExpCache(const Mat3& a) : a_(a) {}

    const Mat3& at(double dt) {
        const auto key = static_cast<std::int64_t>(std::llround(dt * 1e12));
        auto it = cache_.find(key);
        if (it == cache_.end()) it = cache_.emplace(key, mat_exp(a_, dt)).first;
        return it->second;
    }

  private:
    Mat3 a_;
    std::map<std::int64_t, Mat3> cache_;
};

inline double hammerstein_dose(const StaticNonlinearity& nl, double target) {
    if (nl.kind == NlKind::table)
        return invert_nonlinearity_numeric(nl, target, nl.xs.front(), nl.xs.back());
    // Grow the bracket until it straddles the target; a bounded map (Hill)
    // simply never covers an out-of-range dose and the inversion reports it.
    double hi = 1.0;
    for (int it = 0; it < 64; ++it) {
        const double flo = nl.eval(0.0);
        const double fhi = nl.eval(hi);
        if (target >= std::min(flo, fhi) && target <= std::max(flo, fhi)) break;
        hi *= 2.0;
        if (hi > 1e12)
            raise(Errc::unreachable_dose, "input map never reaches the commanded dose");
    }
    return invert_nonlinearity_numeric(nl, target, 0.0, hi);
}

}  // namespace detail

/// Runs the hybrid closed loop for n_firings events starting from x0, firing
/// immediately at t = 0. Between firings the state flows exactly through the
/// matrix exponential; there is no integration error to tune. The modulation
/// maps read the measured output, so a structure whose output map is already
/// applied must be paired with a modulation that does not re-apply it.
inline Trajectory simulate(const PlantStructure& structure, const ModulationConfig& mod,
                           const Vec3& x0, int n_firings, double sample_dt,
                           const NumericsSettings& ns = {}) {
    for (int i = 0; i < 3; ++i)
        if (!(x0[i] >= 0.0)) raise(Errc::domain, "simulate: initial state must be >= 0");
    if (n_firings < 1) raise(Errc::domain, "simulate: need at least one firing");
    if (!(sample_dt > 0.0)) raise(Errc::domain, "simulate: sample_dt must be > 0");
    validate_bounds(mod.bounds);

    Trajectory traj;
    traj.structure = structure;
    traj.mod = mod;
    traj.x0 = x0;
    traj.sample_dt = sample_dt;
    traj.events.reserve(static_cast<std::size_t>(n_firings));

    detail::ExpCache cache(structure.linear.A);
    Vec3 x = x0;
    double t = 0.0;
    for (int n = 0; n < n_firings; ++n) {
        FiringEvent ev;
        ev.n = n;
        ev.t = t;
        ev.state_pre = x;
        ev.y_bar_at_fire = structure.linear.output(x);
        ev.y_at_fire = structure.output_nl ? structure.output_nl->eval(ev.y_bar_at_fire)
                                           : ev.y_bar_at_fire;

        const double dose_cmd = mod.dose(ev.y_at_fire);
        ev.T = mod.period(ev.y_at_fire);
        double jump = dose_cmd;
        ev.lambda = dose_cmd;
        if (structure.input_nl) {
            try {
                ev.lambda = detail::hammerstein_dose(*structure.input_nl, dose_cmd);
            } catch (const Error& e) {
                raise(Errc::simulation_abort,
                      "simulate: event " + std::to_string(n) + ": " + e.what());
            }
            jump = structure.input_nl->eval(ev.lambda);
        }
        ev.state_post = ev.state_pre + jump * structure.linear.B;
        traj.events.push_back(ev);

        x = cache.at(ev.T) * ev.state_post;
        t += ev.T;
    }

    // Fixed-grid samples, each interval rendered from its post-jump state so
    // discontinuities land exactly on event times.
    const Mat3 e_dt = mat_exp(structure.linear.A, sample_dt);
    const double t_end = t;
    std::int64_t k = 0;
    for (std::size_t i = 0; i < traj.events.size(); ++i) {
        const FiringEvent& ev = traj.events[i];
        const bool last = i + 1 == traj.events.size();
        const double stop = last ? t_end : traj.events[i + 1].t;

        double s = static_cast<double>(k) * sample_dt;
        if (s < ev.t) {
            k = static_cast<std::int64_t>(std::ceil(ev.t / sample_dt));
            s = static_cast<double>(k) * sample_dt;
            while (s < ev.t) s = static_cast<double>(++k) * sample_dt;
        }
        if (!(last ? s <= stop : s < stop)) continue;

        Vec3 xs = mat_exp(structure.linear.A, s - ev.t) * ev.state_post;
        while (last ? s <= stop : s < stop) {
            TrajectorySample sm;
            sm.t = s;
            sm.state = xs;
            sm.y_bar = structure.linear.output(xs);
            sm.y = structure.output_nl ? structure.output_nl->eval(sm.y_bar) : sm.y_bar;
            traj.samples.push_back(sm);
            xs = e_dt * xs;
            s = static_cast<double>(++k) * sample_dt;
        }
    }
    (void)ns;
    return traj;
}

/// Per-firing distance to the reference cycle and the first index where the
/// trajectory stays within tolerance for a full persistence window.
struct ConvergenceReport {
    bool converged = false;
    int n_star = -1;
    std::vector<double> distances;  // ||X_n - X|| per firing
    bool monotone = false;  // y_bar(t_n) settles one-sidedly: at most one reversal up to n_star
};

inline constexpr int kConvergenceWindowDefault = 5;

/// tol <= 0 selects the default 1e-6 * ||X||.
inline ConvergenceReport detect_convergence(const Trajectory& traj, const OneCycle& cycle,
                                            double tol = -1.0,
                                            int window = kConvergenceWindowDefault) {
    if (window < 1) raise(Errc::domain, "detect_convergence: window must be >= 1");
    const std::size_t n = traj.events.size();
    if (n < static_cast<std::size_t>(window))
        raise(Errc::domain, "detect_convergence: fewer events than the persistence window");
    if (tol <= 0.0) tol = 1e-6 * cycle.X.norm2();

    ConvergenceReport rep;
    rep.distances.reserve(n);
    for (const FiringEvent& ev : traj.events)
        rep.distances.push_back((ev.state_pre - cycle.X).norm2());

    for (std::size_t i = 0; i + static_cast<std::size_t>(window) <= n && !rep.converged; ++i) {
        bool ok = true;
        for (int j = 0; j < window && ok; ++j)
            ok = rep.distances[i + static_cast<std::size_t>(j)] <= tol;
        if (ok) {
            rep.converged = true;
            rep.n_star = static_cast<int>(i);
        }
    }

    // One direction reversal is tolerated before the settle point: a
    // transient entering from far away can overshoot the stationary level
    // once (the reference design does, by about one percent), while an
    // oscillatory loop flips direction on every firing.
    const std::size_t upto = rep.converged ? static_cast<std::size_t>(rep.n_star) : n - 1;
    int reversals = 0;
    double prev = 0.0;
    for (std::size_t i = 0; i + 1 <= upto; ++i) {
        const double diff = traj.events[i + 1].y_bar_at_fire - traj.events[i].y_bar_at_fire;
        if (diff == 0.0) continue;
        const double sign = diff > 0.0 ? 1.0 : -1.0;
        if (prev != 0.0 && sign != prev) ++reversals;
        prev = sign;
    }
    rep.monotone = reversals <= 1;
    return rep;
}

/// Observed output range after a transient cut, compared against the
/// requested corridor. The measured-output pair is checked only when the
/// spec carries resolved measured bounds. worst_excursion is the raw
/// overshoot; the violation flag ignores excursions below slack_rel times
/// the corridor width, which a synthesized design can exhibit through the
/// period-grid residual alone.
struct CorridorReport {
    double y_bar_lo = 0.0, y_bar_hi = 0.0;  // observed linear-output range
    double y_lo = 0.0, y_hi = 0.0;          // observed measured-output range
    bool violation = false;
    double worst_excursion = 0.0;  // largest distance outside a requested bound
};

inline constexpr double kCorridorSlackRel = 1e-3;

inline CorridorReport corridor_report(const Trajectory& traj, const CorridorSpec& spec,
                                      double transient_cut,
                                      double slack_rel = kCorridorSlackRel) {
    if (!(traj.end_time() > transient_cut))
        raise(Errc::domain, "corridor_report: trajectory ends before the transient cut");

    CorridorReport rep;
    rep.y_bar_lo = std::numeric_limits<double>::infinity();
    rep.y_bar_hi = -rep.y_bar_lo;
    rep.y_lo = rep.y_bar_lo;
    rep.y_hi = -rep.y_bar_lo;
    bool any = false;
    for (const TrajectorySample& sm : traj.samples) {
        if (!(sm.t > transient_cut)) continue;
        any = true;
        rep.y_bar_lo = std::min(rep.y_bar_lo, sm.y_bar);
        rep.y_bar_hi = std::max(rep.y_bar_hi, sm.y_bar);
        rep.y_lo = std::min(rep.y_lo, sm.y);
        rep.y_hi = std::max(rep.y_hi, sm.y);
    }
    if (!any) raise(Errc::domain, "corridor_report: no samples after the transient cut");

    const auto excess = [&](double lo, double hi, double obs_lo, double obs_hi) {
        const double under = std::max(0.0, lo - obs_lo);
        const double over = std::max(0.0, obs_hi - hi);
        return std::max(under, over);
    };
    if (spec.y_bar_min > 0.0 && spec.y_bar_min < spec.y_bar_max) {
        const double e = excess(spec.y_bar_min, spec.y_bar_max, rep.y_bar_lo, rep.y_bar_hi);
        rep.worst_excursion = std::max(rep.worst_excursion, e);
        if (e > slack_rel * (spec.y_bar_max - spec.y_bar_min)) rep.violation = true;
    }
    if (spec.y_min > 0.0 && spec.y_min < spec.y_max) {
        const double e = excess(spec.y_min, spec.y_max, rep.y_lo, rep.y_hi);
        rep.worst_excursion = std::max(rep.worst_excursion, e);
        if (e > slack_rel * (spec.y_max - spec.y_min)) rep.violation = true;
    }
    return rep;
}

}  // namespace igo
