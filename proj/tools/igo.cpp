// Command-line front end: design an impulsive dosing controller for a
// corridor specification, simulate the closed loop, analyze a given cycle,
// or verify the invariant suite on a configured instance.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "igo/igo.hpp"

namespace {

struct CommonArgs {
    std::string config;
    std::string out = "out";
    std::string format = "json";
    long long seed = 0;  // reserved; every pipeline is deterministic
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config, "Scenario file (block format or JSON)")
        ->required();
    cmd->add_option("--out", args.out, "Directory for emitted artifacts");
    cmd->add_option("--format", args.format, "Console output format")
        ->check(CLI::IsMember({"json", "text"}));
    cmd->add_option("--seed", args.seed, "Reserved; accepted for script compatibility");
}

void print_report(const igo::Json& report, const std::string& format,
                  const std::string& text_summary) {
    if (format == "json")
        std::fputs(igo::dump_report(report).c_str(), stdout);
    else
        std::fputs(text_summary.c_str(), stdout);
}

std::string describe_design(const igo::DesignOutcome& o) {
    std::string s;
    s += "period T        = " + igo::fmt17(o.period.T) + "\n";
    s += "weight lambda   = " + igo::fmt17(o.lambda) + "\n";
    s += "fixed point X   = (" + igo::fmt17(o.cycle.X[0]) + ", " + igo::fmt17(o.cycle.X[1]) +
         ", " + igo::fmt17(o.cycle.X[2]) + ")\n";
    s += "modulation      = k1 " + igo::fmt17(o.mod.k1) + ", k2 " + igo::fmt17(o.mod.k2) +
         ", k3 " + igo::fmt17(o.mod.k3) + ", k4 " + igo::fmt17(o.mod.k4) + "\n";
    s += "spectral radius = " + igo::fmt17(o.stability.spectral_radius) +
         (o.stability.stable ? " (stable" : " (UNSTABLE") +
         (o.stability.monotone_convergence ? ", monotone)\n" : ")\n");
    return s;
}

int cmd_design(const CommonArgs& args) {
    const igo::ScenarioConfig sc = igo::load_scenario(args.config);
    const igo::DesignOutcome o = igo::run_design(sc);

    igo::ArtifactSink sink(args.out);
    sink.write("sweep.csv", igo::sweep_csv(o.period));
    const double width = o.corridor.y_max - o.corridor.y_min;
    sink.write("modulation.csv",
               igo::modulation_csv(o.mod, std::max(1e-9, o.corridor.y_min - 0.5 * width),
                                   o.corridor.y_max + 0.5 * width));
    igo::Json report;
    report["config"] = sc.effective;
    report["design"] = igo::design_report_json(o);
    report["artifacts"] = {"sweep.csv", "modulation.csv", "report.json"};
    sink.write("report.json", igo::dump_report(report));
    sink.write_manifest();

    print_report(report, args.format, describe_design(o));
    return 0;
}

int cmd_simulate(const CommonArgs& args) {
    const igo::ScenarioConfig sc = igo::load_scenario(args.config);
    const igo::DesignOutcome o = igo::run_design(sc);
    const igo::SimulationOutcome s = igo::run_simulation(sc, o);

    igo::ArtifactSink sink(args.out);
    sink.write("trajectory.csv", igo::trajectory_csv(s.traj));
    sink.write("events.csv", igo::events_csv(s.traj));
    igo::Json report;
    report["config"] = sc.effective;
    report["design"] = igo::design_report_json(o);
    report["simulation"] = igo::simulation_report_json(s);
    report["artifacts"] = {"trajectory.csv", "events.csv", "report.json"};
    sink.write("report.json", igo::dump_report(report));
    sink.write_manifest();

    std::string text = describe_design(o);
    text += "firings         = " + std::to_string(s.traj.events.size()) + "\n";
    text += "converged       = " + std::string(s.convergence.converged ? "yes" : "no") +
            " (n* = " + std::to_string(s.convergence.n_star) + ")\n";
    text += "output range    = [" + igo::fmt17(s.corridor.y_bar_lo) + ", " +
            igo::fmt17(s.corridor.y_bar_hi) + "] linear, [" + igo::fmt17(s.corridor.y_lo) +
            ", " + igo::fmt17(s.corridor.y_hi) + "] measured\n";
    text += "corridor        = " + std::string(s.corridor.violation ? "VIOLATED" : "held") +
            " (worst excursion " + igo::fmt17(s.corridor.worst_excursion) + ")\n";
    print_report(report, args.format, text);
    return 0;
}

int cmd_analyze(const CommonArgs& args) {
    const igo::ScenarioConfig sc = igo::load_scenario(args.config);
    if (!sc.analyze) igo::raise(igo::Errc::schema, "config: analyze run needs an analyze block");

    const igo::PlantLTI& plant = sc.structure.linear;
    const igo::OneCycle cycle =
        igo::one_cycle(plant, sc.analyze->T, sc.analyze->lambda, sc.numerics);
    igo::CorridorAnalysis ca =
        igo::corridor_extrema(plant, cycle.T, cycle.lambda, sc.numerics);
    if (sc.structure.output_nl)
        ca = igo::map_corridor_through_output_nl(ca, *sc.structure.output_nl);

    igo::Json report;
    report["config"] = sc.effective;
    igo::Json a = igo::Json{{"T", cycle.T},
                            {"lambda", cycle.lambda},
                            {"X", igo::Json::array({cycle.X[0], cycle.X[1], cycle.X[2]})},
                            {"y0", cycle.y0},
                            {"y_bar_min", ca.y_bar_min},
                            {"y_bar_max", ca.y_bar_max},
                            {"extremum_times", ca.extremum_times}};
    if (ca.y_min) a["y_min"] = *ca.y_min;
    if (ca.y_max) a["y_max"] = *ca.y_max;
    report["analysis"] = std::move(a);
    report["artifacts"] = {"report.json"};

    igo::ArtifactSink sink(args.out);
    sink.write("report.json", igo::dump_report(report));
    sink.write_manifest();

    std::string text;
    text += "fixed point X  = (" + igo::fmt17(cycle.X[0]) + ", " + igo::fmt17(cycle.X[1]) + ", " +
            igo::fmt17(cycle.X[2]) + ")\n";
    text += "output bounds  = [" + igo::fmt17(ca.y_bar_min) + ", " + igo::fmt17(ca.y_bar_max) +
            "] linear\n";
    if (ca.y_min && ca.y_max)
        text += "measured       = [" + igo::fmt17(*ca.y_min) + ", " + igo::fmt17(*ca.y_max) +
                "]\n";
    print_report(report, args.format, text);
    return 0;
}

int cmd_verify(const CommonArgs& args) {
    const igo::ScenarioConfig sc = igo::load_scenario(args.config);
    const igo::DesignOutcome o = igo::run_design(sc);
    const auto checks = igo::run_verify_checks(sc, o);
    const igo::Json report = igo::verify_report_json(checks);

    if (args.format == "json") {
        std::fputs(igo::dump_report(report).c_str(), stdout);
    } else {
        for (const igo::VerifyCheck& c : checks)
            std::printf("%-34s %s  %s\n", c.name.c_str(), c.pass ? "PASS" : "FAIL",
                        c.detail.c_str());
    }
    return report.at("all_pass").get<bool>() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Impulsive corridor-holding controller: design, simulation, verification"};
    app.require_subcommand(1);

    CommonArgs args;
    auto* design = app.add_subcommand("design", "Synthesize (T, lambda) and the modulation maps");
    auto* simulate = app.add_subcommand("simulate", "Design, then run the closed loop");
    auto* analyze = app.add_subcommand("analyze", "Corridor analysis of a given (T, lambda)");
    auto* verify = app.add_subcommand("verify", "Run the invariant suite on the configured case");
    for (auto* cmd : {design, simulate, analyze, verify}) add_common(cmd, args);

    try {
        app.parse(argc, argv);
        if (design->parsed()) return cmd_design(args);
        if (simulate->parsed()) return cmd_simulate(args);
        if (analyze->parsed()) return cmd_analyze(args);
        return cmd_verify(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const igo::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return igo::exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
