#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "forceid/csv.hpp"
#include "forceid/errors.hpp"
#include "forceid/model.hpp"

namespace forceid::registry {

/// Closed-form profiles addressable by name from config files.
inline const std::map<std::string, Profile>& expressions() {
    using std::numbers::pi;
    static const std::map<std::string, Profile> table = {
        {"zero", Profile::constant(0.0)},
        {"one", Profile::constant(1.0)},
        {"pi", Profile::constant(pi)},
        {"linear", Profile::closed_form([](double s) { return s; }, [](double) { return 1.0; }, "linear")},
        {"sin_pi", Profile::closed_form([](double s) { return std::sin(pi * s); },
                                        [](double s) { return pi * std::cos(pi * s); }, "sin_pi")},
        {"cos_pi", Profile::closed_form([](double s) { return std::cos(pi * s); },
                                        [](double s) { return -pi * std::sin(pi * s); }, "cos_pi")},
        {"pi_cos_pi", Profile::closed_form([](double s) { return pi * std::cos(pi * s); },
                                           [](double s) { return -pi * pi * std::sin(pi * s); },
                                           "pi_cos_pi")},
        {"ramp_quadratic", Profile::closed_form([](double s) { return s + 0.5 * s * s; },
                                                [](double s) { return 1.0 + s; }, "ramp_quadratic")},
    };
    return table;
}

/// Named profile, a numeric constant, or a `coordinate,value` CSV file (relative to `base`).
inline Profile resolve_profile(const std::string& text, const std::filesystem::path& base = {}) {
    const auto& ex = expressions();
    if (auto it = ex.find(text); it != ex.end()) return it->second;
    try {
        return Profile::constant(csv::parse_double(text));
    } catch (const ValidationError&) {
    }
    std::filesystem::path path(text);
    if (path.is_relative() && !base.empty()) path = base / path;
    if (!std::filesystem::exists(path))
        throw ValidationError("'" + text + "' is neither a known expression, a number nor a file");
    return csv::read_profile(path);
}

struct Preset {
    std::string name;
    std::string description;
    ProblemSpec spec;
    ControlKind control = ControlKind::NeumannControl;
    /// Benchmark force 1 + pi^2 sin(pi x) with closed-form series coefficients.
    bool analytic_series = false;
};

namespace detail {

inline ProblemSpec benchmark_spec() {
    using std::numbers::pi;
    const auto& ex = expressions();
    ProblemSpec s;
    s.wave_speed = 1.0;
    s.length = 1.0;
    s.horizon = 1.0;
    s.boundary_kind = BoundaryKind::Dirichlet;
    s.initial_displacement = ex.at("sin_pi");
    s.initial_velocity = ex.at("one");
    s.left_dirichlet = ex.at("ramp_quadratic");
    s.right_data = ex.at("ramp_quadratic");
    s.measured_flux = ex.at("pi");
    s.exact_force = [](double x) { return 1.0 + pi * pi * std::sin(pi * x); };
    s.exact_displacement = [](double x, double t) { return std::sin(pi * x) + t + 0.5 * t * t; };
    return s;
}

}  // namespace detail

/// Built-in problems.
///  benchmark-sine    u = sin(pi x) + t + t^2/2, f = 1 + pi^2 sin(pi x), flux measured at x = 0
///  benchmark-cosine  same data, displacement measured at x = 0
///  zero              all data zero
///  standing-wave     u = sin(pi x) cos(pi t), f = 0
///  linear-flux       u = x t with a Neumann end at x = L, f = 0
inline const std::vector<Preset>& presets() {
    using std::numbers::pi;
    static const std::vector<Preset> table = [] {
        const auto& ex = expressions();
        std::vector<Preset> out;

        out.push_back({"benchmark-sine", "flux-controlled benchmark", detail::benchmark_spec(),
                       ControlKind::NeumannControl, true});
        out.push_back({"benchmark-cosine", "displacement-controlled benchmark",
                       detail::benchmark_spec(), ControlKind::DirichletControl, true});

        ProblemSpec zero;
        zero.measured_flux = Profile::constant(0.0);
        zero.exact_force = [](double) { return 0.0; };
        zero.exact_displacement = [](double, double) { return 0.0; };
        out.push_back({"zero", "homogeneous data", zero, ControlKind::NeumannControl, false});

        ProblemSpec wave;
        wave.initial_displacement = ex.at("sin_pi");
        wave.measured_flux = ex.at("pi_cos_pi");
        wave.exact_force = [](double) { return 0.0; };
        wave.exact_displacement = [](double x, double t) {
            return std::sin(pi * x) * std::cos(pi * t);
        };
        out.push_back({"standing-wave", "force-free standing wave", wave,
                       ControlKind::NeumannControl, false});

        ProblemSpec lin;
        lin.boundary_kind = BoundaryKind::Neumann;
        lin.initial_velocity = ex.at("linear");
        lin.right_data = ex.at("linear");
        lin.measured_flux = ex.at("linear");
        lin.exact_force = [](double) { return 0.0; };
        lin.exact_displacement = [](double x, double t) { return x * t; };
        out.push_back({"linear-flux", "force-free u = x t, Neumann end at x = L", lin,
                       ControlKind::NeumannControl, false});
        return out;
    }();
    return table;
}

inline const Preset& preset(const std::string& name) {
    const auto& all = presets();
    const auto it = std::find_if(all.begin(), all.end(), [&](const Preset& p) { return p.name == name; });
    if (it == all.end()) throw ValidationError("unknown problem '" + name + "'");
    return *it;
}

/// Problem loaded from a key-value config file.
struct LoadedConfig {
    Preset preset;
    std::optional<int> n_time;
    std::optional<int> n_space;
};

/// Parses `key = value` lines ('#' starts a comment). Keys:
///   problem (optional preset to start from), c, L, T, mu (0 or 1), N, M,
///   u0, v0, p0, pL, q0 (expression name, number, or path to a `coordinate,value` CSV).
inline LoadedConfig load_config(std::istream& in, const std::filesystem::path& base = {}) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            const auto b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }

    LoadedConfig cfg;
    cfg.preset = kv.count("problem") ? preset(kv.at("problem")) : preset("zero");
    cfg.preset.name = kv.count("problem") ? kv.at("problem") + " (config)" : "config";
    ProblemSpec& s = cfg.preset.spec;

    static const std::vector<std::string> known = {"problem", "c", "L", "T", "mu", "N", "M",
                                                   "u0", "v0", "p0", "pL", "q0", "control"};
    for (const auto& [key, value] : kv)
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ValidationError("unknown config key '" + key + "'");

    auto number = [&](const char* key) { return csv::parse_double(kv.at(key)); };
    auto integer = [&](const char* key) {
        const double v = number(key);
        if (v != std::floor(v)) throw ValidationError(std::string(key) + " must be an integer");
        return static_cast<int>(v);
    };
    if (kv.count("c")) s.wave_speed = number("c");
    if (kv.count("L")) s.length = number("L");
    if (kv.count("T")) s.horizon = number("T");
    if (kv.count("mu")) {
        const int m = integer("mu");
        if (m != 0 && m != 1) throw ValidationError("mu must be 0 or 1");
        s.boundary_kind = m == 1 ? BoundaryKind::Dirichlet : BoundaryKind::Neumann;
    }
    if (kv.count("N")) cfg.n_time = integer("N");
    if (kv.count("M")) cfg.n_space = integer("M");
    if (kv.count("control")) {
        const auto& v = kv.at("control");
        if (v == "neumann")
            cfg.preset.control = ControlKind::NeumannControl;
        else if (v == "dirichlet")
            cfg.preset.control = ControlKind::DirichletControl;
        else
            throw ValidationError("control must be 'neumann' or 'dirichlet'");
    }

    bool data_changed = false;
    auto profile = [&](const char* key, Profile& slot) {
        if (!kv.count(key)) return;
        slot = resolve_profile(kv.at(key), base);
        data_changed = true;
    };
    profile("u0", s.initial_displacement);
    profile("v0", s.initial_velocity);
    profile("p0", s.left_dirichlet);
    profile("pL", s.right_data);
    if (kv.count("q0")) {
        s.measured_flux = resolve_profile(kv.at("q0"), base);
        data_changed = true;
    }
    const bool geometry_changed = kv.count("c") || kv.count("L") || kv.count("T") || kv.count("mu");
    if (data_changed || geometry_changed) {
        // closed forms of the starting preset no longer describe this problem
        s.exact_force.reset();
        s.exact_displacement.reset();
        cfg.preset.analytic_series = false;
    }
    return cfg;
}

inline LoadedConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file " + path.string());
    return load_config(in, path.parent_path());
}

}  // namespace forceid::registry
