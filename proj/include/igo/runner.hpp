#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "igo/cycle.hpp"
#include "igo/design.hpp"
#include "igo/error.hpp"
#include "igo/scenario.hpp"
#include "igo/simulate.hpp"

namespace igo {

// ---------------------------------------------------------------------------
// Deterministic serialization. Reports must be byte-identical across runs of
// the same config, so doubles are always printed through one fixed format.
// ---------------------------------------------------------------------------

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline void dump_json(const Json& j, std::string& out, int depth) {
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    const std::string pad_in(static_cast<std::size_t>(depth + 1) * 2, ' ');
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (const auto& [key, value] : j.items()) {
                if (!first) out += ",\n";
                first = false;
                out += pad_in + Json(key).dump() + ": ";
                dump_json(value, out, depth + 1);
            }
            out += "\n" + pad + "}";
            return;
        }
        case Json::value_t::array: {
            bool flat = true;
            for (const Json& e : j) flat = flat && !e.is_structured();
            if (flat) {
                out += "[";
                bool first = true;
                for (const Json& e : j) {
                    if (!first) out += ", ";
                    first = false;
                    dump_json(e, out, depth);
                }
                out += "]";
                return;
            }
            out += "[\n";
            bool first = true;
            for (const Json& e : j) {
                if (!first) out += ",\n";
                first = false;
                out += pad_in;
                dump_json(e, out, depth + 1);
            }
            out += "\n" + pad + "]";
            return;
        }
        case Json::value_t::number_float:
            out += fmt17(j.get<double>());
            return;
        default:
            out += j.dump();
            return;
    }
}

}  // namespace detail

inline std::string dump_report(const Json& j) {
    std::string out;
    detail::dump_json(j, out, 0);
    out += "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Artifact output (atomic writes plus a timestamped manifest)
// ---------------------------------------------------------------------------

class ArtifactSink {
  public:
    explicit ArtifactSink(std::string dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) raise(Errc::internal, "cannot create output directory '" + dir_ + "'");
    }

    void write(const std::string& name, const std::string& content) {
        const std::filesystem::path target = std::filesystem::path(dir_) / name;
        const std::filesystem::path tmp = target.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) raise(Errc::internal, "cannot write '" + tmp.string() + "'");
            out << content;
        }
        std::error_code ec;
        std::filesystem::rename(tmp, target, ec);
        if (ec) raise(Errc::internal, "cannot move '" + tmp.string() + "' into place");
        names_.push_back(name);
    }

    [[nodiscard]] const std::vector<std::string>& names() const { return names_; }

    /// Written last; carries wall-clock timestamps, so it is the one file
    /// that is allowed to differ between identical runs.
    void write_manifest() {
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&now, &tm);
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
        Json m = Json::object();
        m["written_at"] = stamp;
        m["artifacts"] = names_;
        write("manifest.json", dump_report(m));
    }

  private:
    std::string dir_;
    std::vector<std::string> names_;
};

// ---------------------------------------------------------------------------
// Pipelines
// ---------------------------------------------------------------------------

/// Everything the design stage produces; simulation and reporting consume it.
struct DesignOutcome {
    CorridorSpec corridor;  // resolved to both measured and linear bounds
    PeriodDesign period;
    double lambda = 0.0;
    OneCycle cycle;
    CorridorAnalysis achieved;
    SlopeChoice slopes;
    ModulationConfig mod;  // canonical form; carries the output map when one exists
    StabilityReport stability;
};

inline DesignOutcome run_design(const ScenarioConfig& sc) {
    if (!sc.corridor || !sc.design)
        raise(Errc::schema, "config: design run needs corridor and design blocks");
    const DesignSettings& ds = *sc.design;
    const PlantLTI& plant = sc.structure.linear;

    DesignOutcome o;
    o.corridor = resolve_corridor(*sc.corridor, sc.structure.output_nl);
    o.period = design_period(plant, o.corridor, ds.T_min, ds.T_max, ds.grid_n, ds.residual_cap,
                             sc.numerics);
    o.lambda = design_weight(plant, o.period.T, o.corridor, sc.numerics);
    o.cycle = one_cycle(plant, o.period.T, o.lambda, sc.numerics);

    if (ds.have_slopes) {
        o.mod = synthesize_modulation(o.cycle, ds.k2, ds.k4, ds.bounds, sc.structure.output_nl);
        o.slopes = {ds.k2, ds.k4, 0.0};
    } else {
        o.slopes = slope_search(plant, o.cycle, ds.bounds, sc.structure.output_nl, ds.k2_range,
                                ds.k4_range, ds.slope_axis_n);
        o.mod = synthesize_modulation(o.cycle, o.slopes.k2, o.slopes.k4, ds.bounds,
                                      sc.structure.output_nl);
    }
    o.stability = stability_report(plant, o.cycle, o.mod);
    o.slopes.rho = o.stability.spectral_radius;

    o.achieved = corridor_extrema(plant, o.period.T, o.lambda, sc.numerics);
    if (sc.structure.output_nl)
        o.achieved = map_corridor_through_output_nl(o.achieved, *sc.structure.output_nl);
    return o;
}

/// The modulation actually wired into the loop: when the structure applies
/// the output map itself, the controller must see the already-mapped signal
/// and composes nothing.
inline ModulationConfig modulation_for_structure(const DesignOutcome& o,
                                                 const PlantStructure& structure) {
    return structure.output_nl ? o.mod.stripped() : o.mod;
}

struct SimulationOutcome {
    Trajectory traj;
    ConvergenceReport convergence;
    double transient_cut = 0.0;
    CorridorReport corridor;
};

inline SimulationOutcome run_simulation(const ScenarioConfig& sc, const DesignOutcome& o) {
    if (!sc.sim) raise(Errc::schema, "config: simulate run needs a simulate block");
    const SimulateSettings& ss = *sc.sim;

    SimulationOutcome s;
    s.traj = simulate(sc.structure, modulation_for_structure(o, sc.structure), ss.x0,
                      ss.n_firings, ss.sample_dt, sc.numerics);
    s.convergence = detect_convergence(s.traj, o.cycle, ss.convergence_tol, ss.window);
    if (ss.transient_cut >= 0.0)
        s.transient_cut = ss.transient_cut;
    else if (s.convergence.converged)
        s.transient_cut = s.traj.events[static_cast<std::size_t>(s.convergence.n_star)].t;
    else
        s.transient_cut = 0.5 * s.traj.end_time();
    s.corridor = corridor_report(s.traj, o.corridor, s.transient_cut);
    return s;
}

// ---------------------------------------------------------------------------
// Report assembly
// ---------------------------------------------------------------------------

namespace detail {

inline Json json_vec(const Vec3& v) { return Json::array({v[0], v[1], v[2]}); }

inline Json json_multipliers(const std::array<std::complex<double>, 3>& ms) {
    Json arr = Json::array();
    for (const auto& m : ms) arr.push_back(Json{{"re", m.real()}, {"im", m.imag()}});
    return arr;
}

}  // namespace detail

inline Json design_report_json(const DesignOutcome& o) {
    Json r = Json::object();
    r["corridor"] = Json{{"y_min", o.corridor.y_min},
                         {"y_max", o.corridor.y_max},
                         {"y_bar_min", o.corridor.y_bar_min},
                         {"y_bar_max", o.corridor.y_bar_max}};
    r["T"] = o.period.T;
    r["ratio_residual"] = o.period.ratio_residual;
    r["lambda"] = o.lambda;
    r["X"] = detail::json_vec(o.cycle.X);
    r["y0"] = o.cycle.y0;
    Json ach = Json{{"y_bar_min", o.achieved.y_bar_min},
                    {"y_bar_max", o.achieved.y_bar_max},
                    {"extremum_times", o.achieved.extremum_times}};
    if (o.achieved.y_min) ach["y_min"] = *o.achieved.y_min;
    if (o.achieved.y_max) ach["y_max"] = *o.achieved.y_max;
    r["achieved_corridor"] = std::move(ach);
    r["modulation"] = Json{{"k1", o.mod.k1},
                           {"k2", o.mod.k2},
                           {"k3", o.mod.k3},
                           {"k4", o.mod.k4},
                           {"Phi1", o.mod.bounds.Phi1},
                           {"Phi2", o.mod.bounds.Phi2},
                           {"F1", o.mod.bounds.F1},
                           {"F2", o.mod.bounds.F2},
                           {"composes_output_map", o.mod.output_nl.has_value()}};
    r["stability"] = Json{{"multipliers", detail::json_multipliers(o.stability.multipliers)},
                          {"spectral_radius", o.stability.spectral_radius},
                          {"stable", o.stability.stable},
                          {"monotone_convergence", o.stability.monotone_convergence},
                          {"K", detail::json_vec(o.stability.K)},
                          {"J", detail::json_vec(o.stability.J)},
                          {"D", detail::json_vec(o.stability.D)}};
    return r;
}

inline Json simulation_report_json(const SimulationOutcome& s) {
    Json r = Json::object();
    r["n_firings"] = static_cast<long long>(s.traj.events.size());
    r["end_time"] = s.traj.end_time();
    r["converged"] = s.convergence.converged;
    r["n_star"] = s.convergence.n_star;
    r["monotone"] = s.convergence.monotone;
    r["transient_cut"] = s.transient_cut;
    r["corridor"] = Json{{"y_bar_lo", s.corridor.y_bar_lo},
                         {"y_bar_hi", s.corridor.y_bar_hi},
                         {"y_lo", s.corridor.y_lo},
                         {"y_hi", s.corridor.y_hi},
                         {"violation", s.corridor.violation},
                         {"worst_excursion", s.corridor.worst_excursion}};
    return r;
}

// ---------------------------------------------------------------------------
// CSV emission
// ---------------------------------------------------------------------------

inline std::string sweep_csv(const PeriodDesign& pd) {
    std::string out = "T,ratio\n";
    for (const SweepPoint& p : pd.sweep) out += fmt17(p.T) + "," + fmt17(p.ratio) + "\n";
    return out;
}

/// Samples the clamped modulation maps over [lo, hi] in the argument the
/// controller actually reads.
inline std::string modulation_csv(const ModulationConfig& mod, double lo, double hi, int n = 201) {
    std::string out = "arg,dose,period\n";
    for (int i = 0; i < n; ++i) {
        const double v = lo + (hi - lo) * i / (n - 1);
        out += fmt17(v) + "," + fmt17(mod.dose(v)) + "," + fmt17(mod.period(v)) + "\n";
    }
    return out;
}

inline std::string trajectory_csv(const Trajectory& traj) {
    std::string out = "t,x1,x2,x3,y_bar,y\n";
    for (const TrajectorySample& s : traj.samples)
        out += fmt17(s.t) + "," + fmt17(s.state[0]) + "," + fmt17(s.state[1]) + "," +
               fmt17(s.state[2]) + "," + fmt17(s.y_bar) + "," + fmt17(s.y) + "\n";
    return out;
}

inline std::string events_csv(const Trajectory& traj) {
    std::string out =
        "n,t,y,y_bar,lambda,T,pre1,pre2,pre3,post1,post2,post3\n";
    for (const FiringEvent& e : traj.events) {
        out += std::to_string(e.n) + "," + fmt17(e.t) + "," + fmt17(e.y_at_fire) + "," +
               fmt17(e.y_bar_at_fire) + "," + fmt17(e.lambda) + "," + fmt17(e.T);
        for (int i = 0; i < 3; ++i) out += "," + fmt17(e.state_pre[i]);
        for (int i = 0; i < 3; ++i) out += "," + fmt17(e.state_post[i]);
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Verification suite over a configured instance
// ---------------------------------------------------------------------------

struct VerifyCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

inline std::vector<VerifyCheck> run_verify_checks(const ScenarioConfig& sc,
                                                  const DesignOutcome& o) {
    std::vector<VerifyCheck> checks;
    const PlantLTI& plant = sc.structure.linear;
    const auto push = [&](const std::string& name, bool pass, const std::string& detail) {
        checks.push_back({name, pass, detail});
    };

    {
        const Mat3 eAT = mat_exp(plant.A, o.cycle.T);
        const Vec3 back = eAT * (o.cycle.X + o.lambda * plant.B);
        const double err = (back - o.cycle.X).norm_inf() / o.cycle.X.norm_inf();
        push("fixed_point_round_trip", err <= 1e-8, "relative error " + fmt17(err));
    }
    {
        const Vec3 ax = plant.A * o.cycle.X;
        const bool neg = ax[0] < 0.0 && ax[1] < 0.0 && ax[2] < 0.0;
        push("fixed_point_flow_inward", neg,
             "AX = (" + fmt17(ax[0]) + ", " + fmt17(ax[1]) + ", " + fmt17(ax[2]) + ")");
    }
    {
        // Dense sweep of one period against the analytic extrema.
        const auto k = detail::cycle_kernel(plant, o.cycle.T, sc.numerics);
        const int n = 1000000;
        const double dt = o.cycle.T / n;
        const Mat3 e_dt = mat_exp(plant.A, dt);
        Vec3 x = o.lambda * k.w;  // post-jump cycle state
        double lo = o.cycle.y0, hi = o.cycle.y0;
        for (int i = 1; i < n; ++i) {
            x = e_dt * x;
            const double y = plant.C.dot(x);
            lo = std::min(lo, y);
            hi = std::max(hi, y);
        }
        const double err = std::max(std::abs(lo - o.achieved.y_bar_min) / o.achieved.y_bar_min,
                                    std::abs(hi - o.achieved.y_bar_max) / o.achieved.y_bar_max);
        push("extrema_vs_dense_sampling", err <= 1e-6, "relative mismatch " + fmt17(err));
    }

    const SimulateSettings ss = sc.sim.value_or(SimulateSettings{Vec3::zero(), 30, 0.05});
    const Trajectory traj = simulate(sc.structure, modulation_for_structure(o, sc.structure),
                                     ss.x0, ss.n_firings, ss.sample_dt, sc.numerics);
    {
        bool ok = true;
        double worst = 0.0;
        for (const FiringEvent& e : traj.events) {
            ok = ok && e.T >= o.mod.bounds.Phi1 && e.T <= o.mod.bounds.Phi2;
            worst = std::max(worst, std::abs(plant.output(e.state_post) - plant.output(e.state_pre)));
        }
        push("zeno_freedom", ok, "all intervals inside the period clamp");
        push("output_continuity_at_firings", worst < 1e-10, "worst jump " + fmt17(worst));
    }
    {
        bool ok = true;
        for (const TrajectorySample& s : traj.samples)
            ok = ok && s.state[0] >= 0.0 && s.state[1] >= 0.0 && s.state[2] >= 0.0;
        push("state_positivity", ok, "x(t) >= 0 on every sample");
    }
    if (sc.structure.output_nl) {
        PlantStructure bare;
        bare.linear = plant;
        const Trajectory bare_traj = simulate(bare, o.mod, ss.x0, ss.n_firings, ss.sample_dt,
                                              sc.numerics);
        double worst = 0.0;
        for (std::size_t i = 0; i < traj.events.size(); ++i) {
            const FiringEvent& a = traj.events[i];
            const FiringEvent& b = bare_traj.events[i];
            worst = std::max(worst, std::abs(a.lambda - b.lambda) / std::max(1.0, std::abs(a.lambda)));
            worst = std::max(worst, std::abs(a.T - b.T) / std::max(1.0, std::abs(a.T)));
            worst = std::max(worst, (a.state_pre - b.state_pre).norm_inf() /
                                        std::max(1.0, a.state_pre.norm_inf()));
        }
        push("wiener_composition_equivalence", worst <= 1e-10, "worst deviation " + fmt17(worst));
    }
    if (sc.structure.input_nl) {
        double worst = 0.0;
        for (const FiringEvent& e : traj.events) {
            const double jump = e.state_post[0] - e.state_pre[0];
            worst = std::max(worst, std::abs(jump - traj.mod.dose(e.y_at_fire)));
        }
        push("input_map_dose_residual", worst <= 1e-8, "worst residual " + fmt17(worst));
    }
    return checks;
}

inline Json verify_report_json(const std::vector<VerifyCheck>& checks) {
    Json arr = Json::array();
    bool all = true;
    for (const VerifyCheck& c : checks) {
        arr.push_back(Json{{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
        all = all && c.pass;
    }
    return Json{{"all_pass", all}, {"checks", arr}};
}

// ---------------------------------------------------------------------------
// Error-to-exit-code policy, shared by the CLI and its tests
// ---------------------------------------------------------------------------

inline int exit_code_for(Errc code) {
    switch (code) {
        case Errc::schema:
        case Errc::validation:
            return 2;
        case Errc::unreachable_corridor:
            return 3;
        case Errc::no_stabilizing_slopes:
            return 4;
        case Errc::simulation_abort:
        case Errc::unreachable_dose:
            return 5;
        default:
            return 1;
    }
}

}  // namespace igo
