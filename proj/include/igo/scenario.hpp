#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "igo/design.hpp"
#include "igo/error.hpp"
#include "igo/plant.hpp"
#include "igo/simulate.hpp"

namespace igo {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Scenario file parsing. Two interchangeable surfaces: JSON, or a block
// format of the shape
//
//   plant {
//     kind = nmb        # comment
//     alpha = 0.0374
//   }
//   simulate {
//     x0 = 0 0 0        # whitespace-separated numbers form a list
//   }
//
// Both parse into the same JSON document; everything downstream consumes
// that document.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(std::string s) {
    const char* ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline bool parse_full(const std::string& tok, long long& out) {
    const auto* end = tok.data() + tok.size();
    const auto res = std::from_chars(tok.data(), end, out);
    return res.ec == std::errc() && res.ptr == end;
}

inline bool parse_full(const std::string& tok, double& out) {
    const auto* end = tok.data() + tok.size();
    const auto res = std::from_chars(tok.data(), end, out);
    return res.ec == std::errc() && res.ptr == end;
}

inline Json parse_leaf_value(const std::string& value) {
    std::istringstream in(value);
    std::vector<std::string> tokens;
    for (std::string tok; in >> tok;) tokens.push_back(tok);

    std::vector<Json> numbers;
    numbers.reserve(tokens.size());
    for (const std::string& tok : tokens) {
        long long i = 0;
        double d = 0.0;
        if (parse_full(tok, i))
            numbers.emplace_back(i);
        else if (parse_full(tok, d))
            numbers.emplace_back(d);
        else
            return Json(value);  // a non-numeric token makes the whole leaf a string
    }
    if (numbers.size() == 1) return numbers.front();
    Json arr = Json::array();
    for (auto& n : numbers) arr.push_back(std::move(n));
    return arr;
}

}  // namespace detail

/// Parses the block format into a two-level JSON object. Blocks hold only
/// key = value leaves; '#' starts a comment anywhere on a line.
inline Json parse_block_config(const std::string& text) {
    Json root = Json::object();
    std::string block;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        if (const auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::string at = " at line " + std::to_string(line_no);

        if (line == "}") {
            if (block.empty()) raise(Errc::schema, "config: stray '}'" + at);
            block.clear();
            continue;
        }
        if (line.back() == '{') {
            if (!block.empty())
                raise(Errc::schema, "config: nested block inside '" + block + "'" + at);
            const std::string name = detail::trim(line.substr(0, line.size() - 1));
            if (name.empty() || name.find_first_of("={}") != std::string::npos)
                raise(Errc::schema, "config: bad block header" + at);
            if (root.contains(name)) raise(Errc::schema, "config: duplicate block '" + name + "'" + at);
            root[name] = Json::object();
            block = name;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            raise(Errc::schema, "config: expected 'key = value' or a block" + at);
        if (block.empty()) raise(Errc::schema, "config: key outside any block" + at);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            raise(Errc::schema, "config: empty key or value" + at);
        if (root[block].contains(key))
            raise(Errc::schema, "config: duplicate key '" + key + "'" + at);
        root[block][key] = detail::parse_leaf_value(value);
    }
    if (!block.empty()) raise(Errc::schema, "config: unterminated block '" + block + "'");
    return root;
}

/// Reads a scenario file, accepting JSON (first non-space byte '{') or the
/// block format.
inline Json load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::schema, "config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        try {
            return Json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            raise(Errc::schema, std::string("config: JSON parse error: ") + e.what());
        }
    }
    return parse_block_config(text);
}

// ---------------------------------------------------------------------------
// Typed scenario assembly with schema validation
// ---------------------------------------------------------------------------

struct DesignSettings {
    double T_min = 0.0, T_max = 0.0;
    int grid_n = kDesignGridDefault;
    double residual_cap = kRatioResidualCap;
    ModulationBounds bounds;
    bool have_slopes = false;  // fixed (k2, k4) given; otherwise search ranges
    double k2 = 0.0, k4 = 0.0;
    std::pair<double, double> k2_range{0.0, 0.0};
    std::pair<double, double> k4_range{0.0, 0.0};
    int slope_axis_n = kSlopeAxisDefault;
};

struct SimulateSettings {
    Vec3 x0 = Vec3::zero();
    int n_firings = 0;
    double sample_dt = 0.0;
    double convergence_tol = -1.0;  // <= 0 selects the library default
    int window = kConvergenceWindowDefault;
    double transient_cut = -1.0;  // < 0 means cut at the detected convergence time
};

struct AnalyzeSettings {
    double T = 0.0;
    double lambda = 0.0;
};

enum class StructureKind { lti, wiener, hammerstein };

struct ScenarioConfig {
    Json effective;  // full config with every default filled in
    bool plant_is_nmb = false;
    NmbParams nmb;
    StructureKind structure_kind = StructureKind::lti;
    PlantStructure structure;
    std::optional<CorridorSpec> corridor;
    std::optional<DesignSettings> design;
    std::optional<SimulateSettings> sim;
    std::optional<AnalyzeSettings> analyze;
    NumericsSettings numerics;
};

namespace detail {

[[noreturn]] inline void schema_error(const std::string& where, const std::string& what) {
    raise(Errc::schema, "config: " + where + " " + what);
}

inline void check_keys(const Json& block, const std::string& name,
                       std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : block.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) schema_error(name + "." + key, "is not a recognized key");
    }
}

inline double get_number(const Json& block, const std::string& where, const char* key) {
    if (!block.contains(key)) schema_error(where + "." + key, "is required");
    const Json& v = block.at(key);
    if (!v.is_number()) schema_error(where + "." + key, "must be a number");
    return v.get<double>();
}

inline double get_number_or(const Json& block, const std::string& where, const char* key,
                            double fallback) {
    return block.contains(key) ? get_number(block, where, key) : fallback;
}

inline int get_int_or(const Json& block, const std::string& where, const char* key, int fallback) {
    if (!block.contains(key)) return fallback;
    const Json& v = block.at(key);
    if (!v.is_number_integer()) schema_error(where + "." + key, "must be an integer");
    return v.get<int>();
}

inline std::string get_string(const Json& block, const std::string& where, const char* key) {
    if (!block.contains(key)) schema_error(where + "." + key, "is required");
    const Json& v = block.at(key);
    if (!v.is_string()) schema_error(where + "." + key, "must be a string");
    return v.get<std::string>();
}

inline std::string get_string_or(const Json& block, const std::string& where, const char* key,
                                 const std::string& fallback) {
    return block.contains(key) ? get_string(block, where, key) : fallback;
}

inline std::vector<double> get_numbers(const Json& block, const std::string& where,
                                       const char* key) {
    if (!block.contains(key)) schema_error(where + "." + key, "is required");
    const Json& v = block.at(key);
    if (!v.is_array()) schema_error(where + "." + key, "must be a list of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (const Json& e : v) {
        if (!e.is_number()) schema_error(where + "." + key, "must be a list of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

// Builds one nonlinearity from prefixed keys inside the structure block,
// e.g. prefix "output" reads output, output_gamma, output_c50, ...
inline StaticNonlinearity nonlinearity_from(const Json& block, const std::string& where,
                                            const std::string& prefix,
                                            const std::optional<NmbParams>& nmb) {
    const std::string kind = get_string_or(block, where, prefix.c_str(),
                                           nmb && prefix == "output" ? "hill" : "");
    const auto pkey = [&](const char* suffix) { return prefix + "_" + suffix; };
    if (kind == "hill") {
        const double gamma =
            get_number_or(block, where, pkey("gamma").c_str(), nmb ? nmb->gamma : 0.0);
        const double c50 = get_number_or(block, where, pkey("c50").c_str(), nmb ? nmb->c50 : 0.0);
        return hill_nonlinearity(gamma, c50);
    }
    if (kind == "identity") return identity_nonlinearity();
    if (kind == "power")
        return power_nonlinearity(get_number(block, where, pkey("exponent").c_str()),
                                  get_number_or(block, where, pkey("scale").c_str(), 1.0));
    if (kind == "table")
        return table_nonlinearity(get_numbers(block, where, pkey("xs").c_str()),
                                  get_numbers(block, where, pkey("ys").c_str()));
    schema_error(where + "." + prefix, "must be one of hill, identity, power, table");
}

}  // namespace detail

/// Validates the parsed document and assembles the typed scenario. Every
/// default the run will use is materialized into `effective`, so re-running
/// on the echoed config reproduces the run.
inline ScenarioConfig scenario_from_json(const Json& doc) {
    using detail::schema_error;
    if (!doc.is_object()) raise(Errc::schema, "config: top level must be an object");
    for (const auto& [key, value] : doc.items()) {
        static const char* known[] = {"plant", "structure", "corridor", "design",
                                      "simulate", "analyze", "numerics"};
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) schema_error(key, "is not a recognized block");
        if (!value.is_object()) schema_error(key, "must be a block of key = value entries");
    }

    ScenarioConfig sc;
    Json& eff = sc.effective;
    eff = Json::object();

    // plant
    if (!doc.contains("plant")) raise(Errc::schema, "config: plant block is required");
    {
        const Json& p = doc.at("plant");
        const std::string kind = detail::get_string_or(p, "plant", "kind", "nmb");
        Json ep = Json::object();
        ep["kind"] = kind;
        if (kind == "nmb") {
            detail::check_keys(p, "plant",
                               {"kind", "alpha", "gamma", "c50", "v1", "v2", "v3", "u_max"});
            sc.plant_is_nmb = true;
            sc.nmb.alpha = detail::get_number(p, "plant", "alpha");
            sc.nmb.gamma = detail::get_number(p, "plant", "gamma");
            sc.nmb.c50 = detail::get_number(p, "plant", "c50");
            sc.nmb.v1 = detail::get_number_or(p, "plant", "v1", 1.0);
            sc.nmb.v2 = detail::get_number_or(p, "plant", "v2", 4.0);
            sc.nmb.v3 = detail::get_number_or(p, "plant", "v3", 10.0);
            if (p.contains("u_max")) sc.nmb.u_max = detail::get_number(p, "plant", "u_max");
            sc.structure.linear = plant_from_nmb(sc.nmb);
            ep["alpha"] = sc.nmb.alpha;
            ep["gamma"] = sc.nmb.gamma;
            ep["c50"] = sc.nmb.c50;
            ep["v1"] = sc.nmb.v1;
            ep["v2"] = sc.nmb.v2;
            ep["v3"] = sc.nmb.v3;
            if (sc.nmb.u_max) ep["u_max"] = *sc.nmb.u_max;
        } else if (kind == "chain") {
            detail::check_keys(p, "plant", {"kind", "a1", "a2", "a3", "g1", "g2"});
            const double a1 = detail::get_number(p, "plant", "a1");
            const double a2 = detail::get_number(p, "plant", "a2");
            const double a3 = detail::get_number(p, "plant", "a3");
            const double g1 = detail::get_number(p, "plant", "g1");
            const double g2 = detail::get_number(p, "plant", "g2");
            sc.structure.linear = plant_from_chain(a1, a2, a3, g1, g2);
            ep["a1"] = a1;
            ep["a2"] = a2;
            ep["a3"] = a3;
            ep["g1"] = g1;
            ep["g2"] = g2;
        } else {
            schema_error("plant.kind", "must be nmb or chain");
        }
        eff["plant"] = std::move(ep);
    }

    // structure
    {
        Json s = doc.contains("structure") ? doc.at("structure") : Json::object();
        const std::string kind = detail::get_string_or(s, "structure", "kind", "lti");
        const std::optional<NmbParams> nmb =
            sc.plant_is_nmb ? std::optional<NmbParams>(sc.nmb) : std::nullopt;
        Json es = Json::object();
        es["kind"] = kind;
        if (kind == "lti") {
            detail::check_keys(s, "structure", {"kind"});
            sc.structure_kind = StructureKind::lti;
        } else if (kind == "wiener") {
            detail::check_keys(s, "structure",
                               {"kind", "output", "output_gamma", "output_c50", "output_exponent",
                                "output_scale", "output_xs", "output_ys"});
            sc.structure_kind = StructureKind::wiener;
            sc.structure.output_nl = detail::nonlinearity_from(s, "structure", "output", nmb);
        } else if (kind == "hammerstein") {
            detail::check_keys(s, "structure",
                               {"kind", "input", "input_gamma", "input_c50", "input_exponent",
                                "input_scale", "input_xs", "input_ys"});
            sc.structure_kind = StructureKind::hammerstein;
            sc.structure.input_nl = detail::nonlinearity_from(s, "structure", "input", nmb);
        } else {
            schema_error("structure.kind", "must be lti, wiener, or hammerstein");
        }
        const auto echo_nl = [&](const char* prefix, const StaticNonlinearity& nl) {
            const std::string px(prefix);
            switch (nl.kind) {
                case NlKind::hill:
                    es[px] = "hill";
                    es[px + "_gamma"] = nl.gamma;
                    es[px + "_c50"] = nl.c50;
                    break;
                case NlKind::identity:
                    es[px] = "identity";
                    break;
                case NlKind::power:
                    es[px] = "power";
                    es[px + "_exponent"] = nl.exponent;
                    es[px + "_scale"] = nl.scale;
                    break;
                case NlKind::table:
                    es[px] = "table";
                    es[px + "_xs"] = nl.xs;
                    es[px + "_ys"] = nl.ys;
                    break;
            }
        };
        if (sc.structure.output_nl) echo_nl("output", *sc.structure.output_nl);
        if (sc.structure.input_nl) echo_nl("input", *sc.structure.input_nl);
        eff["structure"] = std::move(es);
    }

    // corridor
    if (doc.contains("corridor")) {
        const Json& c = doc.at("corridor");
        detail::check_keys(c, "corridor", {"which", "lo", "hi"});
        const std::string which = detail::get_string_or(c, "corridor", "which", "measured");
        const double lo = detail::get_number(c, "corridor", "lo");
        const double hi = detail::get_number(c, "corridor", "hi");
        if (which == "measured")
            sc.corridor = corridor_from_measured(lo, hi);
        else if (which == "linear")
            sc.corridor = corridor_from_linear(lo, hi);
        else
            schema_error("corridor.which", "must be measured or linear");
        eff["corridor"] = Json{{"which", which}, {"lo", lo}, {"hi", hi}};
    }

    // design
    if (doc.contains("design")) {
        const Json& d = doc.at("design");
        detail::check_keys(d, "design",
                           {"T_min", "T_max", "grid_n", "residual_cap", "Phi1", "Phi2", "F1", "F2",
                            "k2", "k4", "k2_min", "k2_max", "k4_min", "k4_max", "slope_axis_n"});
        DesignSettings ds;
        ds.T_min = detail::get_number(d, "design", "T_min");
        ds.T_max = detail::get_number(d, "design", "T_max");
        ds.grid_n = detail::get_int_or(d, "design", "grid_n", kDesignGridDefault);
        ds.residual_cap = detail::get_number_or(d, "design", "residual_cap", kRatioResidualCap);
        ds.bounds.Phi1 = detail::get_number(d, "design", "Phi1");
        ds.bounds.Phi2 = detail::get_number(d, "design", "Phi2");
        ds.bounds.F1 = detail::get_number(d, "design", "F1");
        ds.bounds.F2 = detail::get_number(d, "design", "F2");
        validate_bounds(ds.bounds);

        const bool fixed = d.contains("k2") || d.contains("k4");
        const bool ranged = d.contains("k2_min") || d.contains("k2_max") ||
                            d.contains("k4_min") || d.contains("k4_max");
        if (fixed && ranged)
            schema_error("design", "specifies both fixed slopes and search ranges");
        Json ed = Json::object();
        ed["T_min"] = ds.T_min;
        ed["T_max"] = ds.T_max;
        ed["grid_n"] = ds.grid_n;
        ed["residual_cap"] = ds.residual_cap;
        ed["Phi1"] = ds.bounds.Phi1;
        ed["Phi2"] = ds.bounds.Phi2;
        ed["F1"] = ds.bounds.F1;
        ed["F2"] = ds.bounds.F2;
        if (fixed) {
            ds.have_slopes = true;
            ds.k2 = detail::get_number(d, "design", "k2");
            ds.k4 = detail::get_number(d, "design", "k4");
            ed["k2"] = ds.k2;
            ed["k4"] = ds.k4;
        } else if (ranged) {
            ds.k2_range = {detail::get_number(d, "design", "k2_min"),
                           detail::get_number(d, "design", "k2_max")};
            ds.k4_range = {detail::get_number(d, "design", "k4_min"),
                           detail::get_number(d, "design", "k4_max")};
            ds.slope_axis_n = detail::get_int_or(d, "design", "slope_axis_n", kSlopeAxisDefault);
            ed["k2_min"] = ds.k2_range.first;
            ed["k2_max"] = ds.k2_range.second;
            ed["k4_min"] = ds.k4_range.first;
            ed["k4_max"] = ds.k4_range.second;
            ed["slope_axis_n"] = ds.slope_axis_n;
        } else {
            schema_error("design", "needs either k2 and k4 or the *_min/*_max search ranges");
        }
        sc.design = ds;
        eff["design"] = std::move(ed);
    }

    // simulate
    if (doc.contains("simulate")) {
        const Json& s = doc.at("simulate");
        detail::check_keys(s, "simulate",
                           {"x0", "n_firings", "sample_dt", "convergence_tol", "window",
                            "transient_cut"});
        SimulateSettings ss;
        const auto x0 = detail::get_numbers(s, "simulate", "x0");
        if (x0.size() != 3) schema_error("simulate.x0", "must be a list of 3 numbers");
        ss.x0 = {x0[0], x0[1], x0[2]};
        ss.n_firings = detail::get_int_or(s, "simulate", "n_firings", 30);
        ss.sample_dt = detail::get_number_or(s, "simulate", "sample_dt", 0.05);
        ss.convergence_tol = detail::get_number_or(s, "simulate", "convergence_tol", -1.0);
        ss.window = detail::get_int_or(s, "simulate", "window", kConvergenceWindowDefault);
        ss.transient_cut = detail::get_number_or(s, "simulate", "transient_cut", -1.0);
        sc.sim = ss;
        eff["simulate"] = Json{{"x0", x0},
                               {"n_firings", ss.n_firings},
                               {"sample_dt", ss.sample_dt},
                               {"convergence_tol", ss.convergence_tol},
                               {"window", ss.window},
                               {"transient_cut", ss.transient_cut}};
    }

    // analyze
    if (doc.contains("analyze")) {
        const Json& a = doc.at("analyze");
        detail::check_keys(a, "analyze", {"T", "lambda"});
        AnalyzeSettings as;
        as.T = detail::get_number(a, "analyze", "T");
        as.lambda = detail::get_number(a, "analyze", "lambda");
        sc.analyze = as;
        eff["analyze"] = Json{{"T", as.T}, {"lambda", as.lambda}};
    }

    // numerics
    {
        Json n = doc.contains("numerics") ? doc.at("numerics") : Json::object();
        detail::check_keys(n, "numerics",
                           {"mu_singularity_eps", "dd_separation_rel", "root_grid_intervals",
                            "root_bisect_rel", "condition_cap", "fixed_point_agree_rel"});
        NumericsSettings& x = sc.numerics;
        x.mu_singularity_eps =
            detail::get_number_or(n, "numerics", "mu_singularity_eps", x.mu_singularity_eps);
        x.dd_separation_rel =
            detail::get_number_or(n, "numerics", "dd_separation_rel", x.dd_separation_rel);
        x.root_grid_intervals =
            detail::get_int_or(n, "numerics", "root_grid_intervals", x.root_grid_intervals);
        x.root_bisect_rel =
            detail::get_number_or(n, "numerics", "root_bisect_rel", x.root_bisect_rel);
        x.condition_cap = detail::get_number_or(n, "numerics", "condition_cap", x.condition_cap);
        x.fixed_point_agree_rel =
            detail::get_number_or(n, "numerics", "fixed_point_agree_rel", x.fixed_point_agree_rel);
        eff["numerics"] = Json{{"mu_singularity_eps", x.mu_singularity_eps},
                               {"dd_separation_rel", x.dd_separation_rel},
                               {"root_grid_intervals", x.root_grid_intervals},
                               {"root_bisect_rel", x.root_bisect_rel},
                               {"condition_cap", x.condition_cap},
                               {"fixed_point_agree_rel", x.fixed_point_agree_rel}};
    }

    return sc;
}

inline ScenarioConfig load_scenario(const std::string& path) {
    return scenario_from_json(load_config_file(path));
}

}  // namespace igo
