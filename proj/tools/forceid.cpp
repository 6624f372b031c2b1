// forceid: direct BEM runs, force identification, condition tables and L-curves.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "forceid/forceid.hpp"

namespace {

namespace ex = forceid::experiment;

enum ExitCode { Ok = 0, Usage = 1, Validation = 2, Numerical = 3 };

std::vector<double> parse_lambdas(const std::string& text, bool& from_lcurve) {
    std::vector<double> out;
    if (text == "lcurve") {
        from_lcurve = true;
        return out;
    }
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto piece = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        out.push_back(forceid::csv::parse_double(piece));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    for (double v : out)
        if (!(v >= 0.0)) throw forceid::ValidationError("--lambda values must be >= 0");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Space-dependent force identification for the 1D wave equation"};
    app.require_subcommand(1);

    std::string problem = "benchmark-sine";
    std::string config;
    int n_time = 0, n_space = 0, modes = 0;
    std::string control;
    double noise_pct = 0.0;
    std::uint64_t seed = 0;
    std::string lambda;
    int reg_order = 0;
    std::string out_dir = "out";
    bool global = false;
    bool log_axes = false;

    std::vector<CLI::Option*> n_opts, m_opts, k_opts;
    auto given = [](const std::vector<CLI::Option*>& opts) {
        for (auto* o : opts)
            if (o->count()) return true;
        return false;
    };
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--problem", problem, "built-in problem name")
            ->check(CLI::IsMember({"benchmark-sine", "benchmark-cosine", "zero", "standing-wave", "linear-flux"}));
        sub->add_option("--config", config, "key-value problem file")->check(CLI::ExistingFile);
        n_opts.push_back(sub->add_option("-N", n_time, "time elements"));
        m_opts.push_back(sub->add_option("-M", n_space, "space elements"));
        k_opts.push_back(sub->add_option("-K", modes, "series modes"));
        sub->add_option("--control", control, "measured quantity at x = 0")
            ->check(CLI::IsMember({"neumann", "dirichlet"}));
        sub->add_option("--noise-pct", noise_pct, "noise level in percent of max |data|");
        sub->add_option("--seed", seed, "noise seed");
        sub->add_option("--lambda", lambda, "value, comma list, or 'lcurve'");
        sub->add_option("--reg-order", reg_order, "penalty order")->check(CLI::IsMember({0, 1, 2}));
        sub->add_option("--out", out_dir, "output directory");
        sub->add_flag("--global", global, "solve the direct problem as one linear system");
        sub->add_flag("--log-axes", log_axes, "locate the L-curve corner on log-log axes");
    };
    auto* direct = app.add_subcommand("direct", "boundary traces and mesh convergence");
    auto* invert = app.add_subcommand("invert", "full identification pipeline");
    auto* tables = app.add_subcommand("tables", "condition numbers of the design matrix");
    auto* lcurve = app.add_subcommand("lcurve", "L-curve and corner");
    for (auto* sub : {direct, invert, tables, lcurve}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? Ok : Validation;
    }

    try {
        ex::Settings s;
        s.problem = problem;
        if (!config.empty()) s.config = config;
        if (given(n_opts)) s.n_time = n_time;
        if (given(m_opts)) s.n_space = n_space;
        if (given(k_opts)) s.modes = modes;
        if (!control.empty())
            s.control = control == "neumann" ? forceid::ControlKind::NeumannControl
                                             : forceid::ControlKind::DirichletControl;
        s.noise = {noise_pct, seed};
        if (!lambda.empty()) s.lambdas = parse_lambdas(lambda, s.lambda_from_lcurve);
        s.order = static_cast<forceid::RegularizationOrder>(reg_order);
        s.method = global ? forceid::bem::Method::Global : forceid::bem::Method::Marching;
        s.axes = log_axes ? forceid::CurveAxes::Log : forceid::CurveAxes::Linear;

        ex::Artifacts result;
        if (*direct)
            result = ex::cmd_direct(s);
        else if (*invert)
            result = ex::cmd_invert(s);
        else if (*tables)
            result = ex::cmd_tables(s);
        else
            result = ex::cmd_lcurve(s);

        for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
        result.save(out_dir);
        std::cout << result.report_text();
        return Ok;
    } catch (const forceid::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return Validation;
    } catch (const forceid::DimensionError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return Validation;
    } catch (const forceid::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return Numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return Usage;
    }
}
