#pragma once

// Experiment drivers behind the command-line tool. Each command returns its tables and
// a key-value report; nothing touches the file system until Artifacts::save.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "forceid/bem.hpp"
#include "forceid/csv.hpp"
#include "forceid/errors.hpp"
#include "forceid/inverse.hpp"
#include "forceid/model.hpp"
#include "forceid/noise.hpp"
#include "forceid/registry.hpp"

namespace forceid::experiment {

struct Settings {
    std::string problem = "benchmark-sine";
    std::optional<std::filesystem::path> config;
    std::optional<int> n_time;
    std::optional<int> n_space;
    std::optional<int> modes;
    std::optional<ControlKind> control;
    NoiseSpec noise;
    std::vector<double> lambdas;  ///< empty: command default
    bool lambda_from_lcurve = false;
    RegularizationOrder order = RegularizationOrder::Zeroth;
    bem::Method method = bem::Method::Marching;
    CurveAxes axes = CurveAxes::Linear;
};

/// Emitted tables plus the plain-text report.
struct Artifacts {
    std::vector<std::pair<std::string, csv::Table>> tables;
    std::vector<std::pair<std::string, std::string>> report;
    std::vector<std::string> warnings;
    double runtime_seconds = 0.0;

    void add(std::string name, csv::Table table) { tables.emplace_back(std::move(name), std::move(table)); }
    void note(std::string key, std::string value) { report.emplace_back(std::move(key), std::move(value)); }
    void note(std::string key, double value) { note(std::move(key), csv::format(value)); }

    const csv::Table& table(const std::string& name) const {
        for (const auto& [n, t] : tables)
            if (n == name) return t;
        throw Error("no table named " + name);
    }
    bool has_table(const std::string& name) const {
        return std::any_of(tables.begin(), tables.end(), [&](const auto& e) { return e.first == name; });
    }
    const std::string& value(const std::string& key) const {
        for (const auto& [k, v] : report)
            if (k == key) return v;
        throw Error("no report entry " + key);
    }

    std::string report_text() const {
        std::ostringstream os;
        for (const auto& [k, v] : report) os << k << ": " << v << '\n';
        for (const auto& w : warnings) os << "warning: " << w << '\n';
        os << "runtime_seconds: " << runtime_seconds << '\n';
        return os.str();
    }

    void save(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir);
        for (const auto& [name, t] : tables) t.save(dir / name);
        std::ofstream out(dir / "report.txt", std::ios::binary);
        if (!out) throw Error("cannot write " + (dir / "report.txt").string());
        out << report_text();
    }
};

/// Problem after applying the config file and command-line overrides.
struct Resolved {
    registry::Preset preset;
    ControlKind control;
    std::optional<int> n_time;
    std::optional<int> n_space;
};

inline Resolved resolve(const Settings& s) {
    Resolved r;
    if (s.config) {
        auto cfg = registry::load_config(*s.config);
        r.preset = std::move(cfg.preset);
        r.n_time = cfg.n_time;
        r.n_space = cfg.n_space;
    } else {
        r.preset = registry::preset(s.problem);
    }
    if (s.n_time) r.n_time = s.n_time;
    if (s.n_space) r.n_space = s.n_space;
    r.control = s.control.value_or(r.preset.control);
    if (r.n_time && *r.n_time < 1) throw ValidationError("N must be >= 1");
    if (r.n_space && *r.n_space < 1) throw ValidationError("M must be >= 1");
    if (s.modes && *s.modes < 1) throw ValidationError("K must be >= 1");
    if (!(s.noise.percent >= 0.0)) throw ValidationError("noise percent must be >= 0");

    const auto violations = validate(r.preset.spec);
    if (!violations.empty()) {
        std::string msg = "invalid problem '" + r.preset.name + "':";
        for (const auto& v : violations) msg += "\n  " + v.message;
        throw ValidationError(msg);
    }
    return r;
}

inline Grid make_grid(const Resolved& r, int n_time) {
    return r.n_space ? Grid(r.preset.spec, n_time, *r.n_space)
                     : Grid::courant_matched(r.preset.spec, n_time);
}

inline Vector linspace(double a, double b, std::size_t count) {
    Vector out(count);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = count == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1);
    return out;
}

namespace detail {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline bem::WarningSink collect(Artifacts& a) {
    return [&a](const std::string& w) {
        if (std::find(a.warnings.begin(), a.warnings.end(), w) == a.warnings.end())
            a.warnings.push_back(w);
    };
}

inline std::string mesh_tag(const Grid& g) {
    return "N" + std::to_string(g.n_time()) + "_M" + std::to_string(g.n_space());
}

/// Largest difference between a trace and a finer one whose N is a multiple of the coarse N.
/// average = false compares the values listed at shared times; average = true compares a coarse
/// element mean with the mean of the fine elements it contains.
inline double max_ratio_diff(const Vector& coarse, const Vector& fine, bool average) {
    if (fine.size() % coarse.size() != 0) return std::nan("");
    const std::size_t r = fine.size() / coarse.size();
    double m = 0.0;
    for (std::size_t n = 0; n < coarse.size(); ++n) {
        double f = 0.0;
        if (average) {
            for (std::size_t j = 0; j < r; ++j) f += fine[n * r + j];
            f /= static_cast<double>(r);
        } else {
            f = fine[n * r + r - 1];
        }
        m = std::max(m, std::abs(coarse[n] - f));
    }
    return m;
}

}  // namespace detail

/// Boundary traces for every requested mesh and differences between consecutive meshes.
///
/// Meshes: -N (one mesh) or N in {20, 40, 80}; M follows -M or the Courant-matched choice.
inline Artifacts cmd_direct(const Settings& s) {
    detail::Stopwatch clock;
    Artifacts out;
    const auto warn = detail::collect(out);
    const Resolved r = resolve(s);
    const std::vector<int> meshes = r.n_time ? std::vector<int>{*r.n_time} : std::vector<int>{20, 40, 80};

    out.note("command", "direct");
    out.note("problem", r.preset.name);
    out.note("control", to_string(r.control));

    std::vector<bem::BoundaryTraces> traces;
    for (int n : meshes) {
        const Grid g = make_grid(r, n);
        auto sol = bem::solve_direct(r.preset.spec, g, r.control, s.method, warn);
        out.add("traces_" + detail::mesh_tag(g) + ".csv", csv::traces_table(sol.traces));

        Vector xs;
        for (int i = 1; i <= 9; ++i) xs.push_back(g.length() * i / 10.0);
        std::vector<int> steps;
        for (int k = 1; k <= 10; ++k) steps.push_back(std::max(1, static_cast<int>(std::lround(k * n / 10.0))));
        steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
        out.add("interior_" + detail::mesh_tag(g) + ".csv",
                csv::field_table(sol.interior_field(xs, steps), "v"));
        traces.push_back(std::move(sol.traces));
    }

    csv::Table conv({"N_coarse", "N_fine", "v0", "vL", "dv0", "dvL", "dv0_avg", "dvL_avg"});
    for (std::size_t i = 0; i + 1 < traces.size(); ++i) {
        const auto& a = traces[i];
        const auto& b = traces[i + 1];
        const std::vector<double> row = {
            static_cast<double>(meshes[i]), static_cast<double>(meshes[i + 1]),
            detail::max_ratio_diff(a.v0, b.v0, false), detail::max_ratio_diff(a.vL, b.vL, false),
            detail::max_ratio_diff(a.dv0, b.dv0, false), detail::max_ratio_diff(a.dvL, b.dvL, false),
            detail::max_ratio_diff(a.dv0, b.dv0, true), detail::max_ratio_diff(a.dvL, b.dvL, true)};
        conv.add_row(row);
        const std::string tag = std::to_string(meshes[i]) + "_" + std::to_string(meshes[i + 1]);
        out.note("diff_v0_" + tag, row[2]);
        out.note("diff_dv0_" + tag, row[4]);
    }
    out.add("convergence.csv", std::move(conv));
    out.runtime_seconds = clock.seconds();
    return out;
}

/// Everything the inverse commands share: direct solve, noisy data and the design matrix.
struct InverseSetup {
    Resolved resolved;
    Grid grid;
    bem::DirectSolution direct;
    Vector clean;  ///< measurement at t_1..t_N
    Vector noisy;
    Vector data;  ///< noisy measurement minus the direct trace
    DesignMatrix q;
    Vector xs;          ///< force evaluation points
    Vector exact_force; ///< empty without a closed form
};

inline InverseSetup prepare_inverse(const Settings& s, const bem::WarningSink& warn = {}) {
    Resolved r = resolve(s);
    const Grid grid = make_grid(r, r.n_time.value_or(80));
    auto direct = bem::solve_direct(r.preset.spec, grid, r.control, s.method, warn);
    Vector clean = measurement(r.control, r.preset.spec, grid);
    Vector noisy = perturb(clean, s.noise);
    Vector data = inverse_data(r.control, direct.traces, noisy);
    DesignMatrix q = assemble_design_matrix(grid, s.modes.value_or(20), r.control, r.preset.spec, warn);
    Vector xs = linspace(0.0, r.preset.spec.length, 81);
    Vector exact;
    if (r.preset.spec.exact_force)
        for (double x : xs) exact.push_back((*r.preset.spec.exact_force)(x));
    return {std::move(r),     grid,           std::move(direct), std::move(clean), std::move(noisy),
            std::move(data),  std::move(q),   std::move(xs),     std::move(exact)};
}

namespace detail {

inline csv::Table force_table(const Vector& xs, const Vector& f) {
    csv::Table t({"x", "f"});
    for (std::size_t i = 0; i < xs.size(); ++i) t.add_row({xs[i], f[i]});
    return t;
}

inline csv::Table coefficient_table(const Vector& b) {
    csv::Table t({"k", "b_k"});
    for (std::size_t k = 0; k < b.size(); ++k) t.add_row({static_cast<double>(k + 1), b[k]});
    return t;
}

inline csv::Table lcurve_table(const LCurve& lc) {
    csv::Table t({"lambda", "residual_norm", "solution_norm", "curvature"});
    for (const auto& p : lc.points) t.add_row({p.lambda, p.residual_norm, p.solution_norm, p.curvature});
    return t;
}

/// `lambda,error` over a grid; returns the lambda of the smallest error.
inline double error_sweep(const InverseSetup& in, const Vector& lambdas, RegularizationOrder order,
                          csv::Table& table) {
    double best = lambdas.front();
    double best_err = std::numeric_limits<double>::infinity();
    for (double lam : lambdas) {
        const auto sol = tikhonov_solve(in.q, in.data, {lam, order});
        const double err =
            error_norm(reconstruct_force(sol.b, in.q.eigenvalues, in.q.control, in.xs), in.exact_force);
        table.add_row({lam, err});
        if (err < best_err) {
            best_err = err;
            best = lam;
        }
    }
    return best;
}

inline void write_inverse_data(const InverseSetup& in, Artifacts& out) {
    csv::Table data({"t", "clean", "noisy", "g"});
    for (std::size_t n = 0; n < in.clean.size(); ++n)
        data.add_row({in.grid.time(static_cast<int>(n) + 1), in.clean[n], in.noisy[n], in.data[n]});
    out.add("inverse_data.csv", std::move(data));
}

}  // namespace detail

/// Full pipeline: direct solve, inverse data, regularized coefficients, force and displacement.
///
/// --lambda takes one value, a list (the first is used for force.csv / displacement.csv) or
/// "lcurve" (corner of the default grid).
inline Artifacts cmd_invert(const Settings& s) {
    detail::Stopwatch clock;
    Artifacts out;
    const auto warn = detail::collect(out);
    const InverseSetup in = prepare_inverse(s, warn);
    const auto& spec = in.resolved.preset.spec;

    out.note("command", "invert");
    out.note("problem", in.resolved.preset.name);
    out.note("control", to_string(in.resolved.control));
    out.note("N", static_cast<double>(in.grid.n_time()));
    out.note("M", static_cast<double>(in.grid.n_space()));
    out.note("K", static_cast<double>(in.q.modes()));
    out.note("noise_percent", s.noise.percent);
    out.note("seed", std::to_string(s.noise.seed));
    out.note("regularization_order", std::to_string(static_cast<int>(s.order)));

    const auto sv = svd(in.q.entries).values;
    csv::Table svt({"k", "sv", "sv_normalized"});
    for (std::size_t k = 0; k < sv.size(); ++k)
        svt.add_row({static_cast<double>(k + 1), sv[k], sv[k] / sv.front()});
    out.add("singular_values.csv", std::move(svt));
    const double cond = sv.back() > 0.0 ? sv.front() / sv.back() : std::numeric_limits<double>::infinity();
    out.note("cond", cond);
    out.note("cond_normal", cond * cond);

    detail::write_inverse_data(in, out);

    Vector lambdas = s.lambdas.empty() ? Vector{0.0} : s.lambdas;
    if (s.lambda_from_lcurve) {
        const auto lc = lcurve(in.q.entries, in.data, default_lambda_grid(), s.order, s.axes);
        for (const auto& w : lc.warnings) warn(w);
        out.add("lcurve.csv", detail::lcurve_table(lc));
        lambdas = {lc.corner_lambda()};
        out.note("lcurve_corner_lambda", lc.corner_lambda());
    }

    const bool exact = !in.exact_force.empty();
    const Vector analytic = in.resolved.preset.analytic_series
                                ? analytic_coefficients(in.resolved.control, static_cast<int>(in.q.modes()))
                                : Vector{};
    if (!analytic.empty()) out.add("analytic_coefficients.csv", detail::coefficient_table(analytic));
    if (exact) out.add("force_exact.csv", detail::force_table(in.xs, in.exact_force));

    csv::Table sweep_coeffs({"lambda", "k", "b_k"});
    csv::Table sweep_force({"lambda", "x", "f"});
    csv::Table errors({"lambda", "error"});
    std::optional<RegularizedSolution> primary;
    for (double lam : lambdas) {
        const auto sol = tikhonov_solve(in.q, in.data, {lam, s.order});
        const Vector f = reconstruct_force(sol.b, in.q.eigenvalues, in.q.control, in.xs);
        for (std::size_t k = 0; k < sol.b.size(); ++k)
            sweep_coeffs.add_row({lam, static_cast<double>(k + 1), sol.b[k]});
        for (std::size_t i = 0; i < f.size(); ++i) sweep_force.add_row({lam, in.xs[i], f[i]});
        if (exact) errors.add_row({lam, error_norm(f, in.exact_force)});
        if (!primary) {
            primary = sol;
            out.add("coefficients.csv", detail::coefficient_table(sol.b));
            out.add("force.csv", detail::force_table(in.xs, f));
            out.note("lambda", lam);
            out.note("b_1", sol.b.front());
            out.note("residual_norm", sol.residual_norm);
            out.note("solution_norm", sol.solution_norm);
            if (!analytic.empty()) {
                out.note("analytic_b_1", analytic.front());
                out.note("b_1_relative_error", std::abs(sol.b.front() - analytic.front()) / std::abs(analytic.front()));
            }
            if (exact) out.note("error_norm", error_norm(f, in.exact_force));
        }
    }
    if (lambdas.size() > 1) {
        out.add("coefficients_sweep.csv", std::move(sweep_coeffs));
        out.add("force_sweep.csv", std::move(sweep_force));
    }
    if (exact) out.add("errors.csv", std::move(errors));

    if (!analytic.empty()) {
        const Vector f5 = reconstruct_force(Vector(analytic.begin(), analytic.begin() + std::min<std::size_t>(5, analytic.size())),
                                            Vector(in.q.eigenvalues.begin(), in.q.eigenvalues.begin() + std::min<std::size_t>(5, analytic.size())),
                                            in.q.control, in.xs);
        out.add("force_truncated_K5.csv", detail::force_table(in.xs, f5));
        out.note("truncation_error_K5", error_norm(f5, in.exact_force));
    }

    if (exact) {
        csv::Table sweep({"lambda", "error"});
        const double best = detail::error_sweep(in, default_lambda_grid(), s.order, sweep);
        out.add("error_sweep.csv", std::move(sweep));
        out.note("error_sweep_argmin_lambda", best);
    }

    // u = v + w_K on a 20 x 20 interior grid
    const int N = in.grid.n_time();
    Vector ux;
    for (int i = 1; i <= 20; ++i) ux.push_back(spec.length * i / 21.0);
    std::vector<int> steps;
    for (int m = 1; m <= 20; ++m) steps.push_back(std::max(1, static_cast<int>(std::lround(m * N / 20.0))));
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
    const auto v = in.direct.interior_field(ux, steps);
    const auto w = reconstruct_w(primary->b, in.q.eigenvalues, in.q.control, spec.wave_speed, ux, v.ts);
    const auto u = superpose(v, w);
    out.add("displacement.csv", csv::field_table(u, "u"));
    if (spec.exact_displacement) {
        SampledField ue(ux, v.ts);
        double m = 0.0;
        for (std::size_t n = 0; n < v.ts.size(); ++n)
            for (std::size_t i = 0; i < ux.size(); ++i) {
                ue.at(i, n) = (*spec.exact_displacement)(ux[i], v.ts[n]);
                m = std::max(m, std::abs(ue.at(i, n) - u.at(i, n)));
            }
        out.add("displacement_exact.csv", csv::field_table(ue, "u"));
        out.note("displacement_max_error", m);
    }
    out.runtime_seconds = clock.seconds();
    return out;
}

/// cond(Q) and cond(Q^T Q) for N in {20,40,80} x K in {5,10,20}, per control kind.
inline Artifacts cmd_tables(const Settings& s) {
    detail::Stopwatch clock;
    Artifacts out;
    const auto warn = detail::collect(out);
    const Resolved r = resolve(s);
    const std::vector<int> ns = s.n_time ? std::vector<int>{*s.n_time} : std::vector<int>{20, 40, 80};
    const std::vector<int> ks = s.modes ? std::vector<int>{*s.modes} : std::vector<int>{5, 10, 20};
    std::vector<ControlKind> controls = {ControlKind::NeumannControl, ControlKind::DirichletControl};
    if (s.control) controls = {*s.control};

    out.note("command", "tables");
    out.note("problem", r.preset.name);
    for (ControlKind c : controls) {
        csv::Table t({"N", "K", "cond", "cond_normal"});
        for (int k : ks)
            for (int n : ns) {
                const Grid g = make_grid(r, n);
                const auto q = assemble_design_matrix(g, k, c, r.preset.spec, warn);
                const double cond = condition_number(q.entries);
                t.add_row({static_cast<double>(n), static_cast<double>(k), cond, cond * cond});
                const std::string tag = to_string(c) + "_N" + std::to_string(n) + "_K" + std::to_string(k);
                out.note("cond_" + tag, cond);
                out.note("cond_normal_" + tag, cond * cond);
            }
        out.add("condition_numbers_" + to_string(c) + ".csv", std::move(t));
    }
    out.runtime_seconds = clock.seconds();
    return out;
}

/// L-curve over the default grid (or --lambda values) plus the coarse hand-picked set.
inline Artifacts cmd_lcurve(const Settings& s) {
    detail::Stopwatch clock;
    Artifacts out;
    const auto warn = detail::collect(out);
    const InverseSetup in = prepare_inverse(s, warn);

    out.note("command", "lcurve");
    out.note("problem", in.resolved.preset.name);
    out.note("control", to_string(in.resolved.control));
    out.note("noise_percent", s.noise.percent);
    out.note("seed", std::to_string(s.noise.seed));
    if (s.noise.percent == 0.0) warn("L-curve on noise-free data; the corner may be meaningless");
    detail::write_inverse_data(in, out);

    Vector grid = s.lambdas.empty() ? default_lambda_grid() : s.lambdas;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    const auto lc = lcurve(in.q.entries, in.data, grid, s.order, s.axes);
    for (const auto& w : lc.warnings) warn(w);
    out.add("lcurve.csv", detail::lcurve_table(lc));
    csv::Table pen({"lambda", "penalty_norm"});
    for (const auto& p : lc.points) pen.add_row({p.lambda, p.penalty_norm});
    out.add("lcurve_penalty.csv", std::move(pen));
    out.note("corner_lambda", lc.corner_lambda());

    const auto coarse = lcurve(in.q.entries, in.data, coarse_lambda_samples(), s.order, s.axes);
    out.add("lcurve_coarse.csv", detail::lcurve_table(coarse));
    out.note("coarse_corner_lambda", coarse.corner_lambda());

    if (!in.exact_force.empty()) {
        csv::Table sweep({"lambda", "error"});
        const double best = detail::error_sweep(in, grid, s.order, sweep);
        out.add("error_sweep.csv", std::move(sweep));
        out.note("error_sweep_argmin_lambda", best);
    }
    out.runtime_seconds = clock.seconds();
    return out;
}

}  // namespace forceid::experiment
