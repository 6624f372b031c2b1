#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "forceid/errors.hpp"
#include "forceid/linalg.hpp"
#include "forceid/tolerances.hpp"

namespace forceid {

/// Condition imposed at x = L: mu = 1 (Dirichlet) or mu = 0 (Neumann).
enum class BoundaryKind { Dirichlet, Neumann };

/// Which boundary measurement closes the inverse problem at x = 0.
///  - NeumannControl: the flux q0 is measured, the direct problem uses p0; data g = q0 - v_x(0,t).
///  - DirichletControl: the displacement p0 is measured, the direct problem uses q0; data h = p0 - v(0,t).
enum class ControlKind { NeumannControl, DirichletControl };

inline int mu(BoundaryKind kind) { return kind == BoundaryKind::Dirichlet ? 1 : 0; }

inline std::string to_string(ControlKind kind) {
    return kind == ControlKind::NeumannControl ? "neumann" : "dirichlet";
}

/// A real function of one variable, either closed form or tabulated.
class Profile {
public:
    using Fn = std::function<double(double)>;

    Profile()
        : value_([](double) { return 0.0; }), derivative_([](double) { return 0.0; }), label_("0") {}

    static Profile closed_form(Fn value, Fn derivative = {}, std::string label = "closed-form") {
        Profile p;
        p.value_ = std::move(value);
        p.derivative_ = std::move(derivative);
        p.label_ = std::move(label);
        return p;
    }

    static Profile constant(double c) {
        std::ostringstream os;
        os.precision(17);
        os << c;
        return closed_form([c](double) { return c; }, [](double) { return 0.0; }, os.str());
    }

    /// Piecewise-linear interpolant through (coords[i], values[i]); coords strictly increasing.
    static Profile tabulated(Vector coords, Vector values, std::string label = "table") {
        if (coords.size() != values.size())
            throw DimensionError("tabulated profile: coordinate/value length mismatch");
        if (coords.size() < 2) throw ValidationError("tabulated profile needs at least 2 samples");
        for (std::size_t i = 1; i < coords.size(); ++i)
            if (!(coords[i] > coords[i - 1]))
                throw ValidationError("tabulated profile: coordinates must be strictly increasing");
        Profile p;
        p.derivative_ = nullptr;
        p.table_ = std::make_shared<const TableData>(TableData{std::move(coords), std::move(values)});
        const auto table = p.table_;
        p.value_ = [table](double s) { return table->interpolate(s); };
        p.label_ = std::move(label);
        return p;
    }

    double operator()(double s) const { return value_(s); }

    const std::string& label() const noexcept { return label_; }
    bool has_derivative() const noexcept { return static_cast<bool>(derivative_); }

    struct Slope {
        double value;
        double error_estimate;  ///< 0 when an exact derivative is available
    };

    /// Derivative at s. Falls back to a one-sided second-order difference
    /// (left-sided when `from_left`) when no closed-form derivative was supplied.
    Slope slope(double s, double step, bool from_left) const {
        if (derivative_) return {derivative_(s), 0.0};
        double f0, f1, f2, h1, h2;
        if (table_) {
            const auto& x = table_->coords;
            const auto& y = table_->values;
            const std::size_t n = x.size();
            if (n < 3) {
                const double d = (y[1] - y[0]) / (x[1] - x[0]);
                return {d, std::abs(d) * 1e-3};
            }
            // three nodes on the requested side of s
            const auto it = std::lower_bound(x.begin(), x.end(), s);
            const std::size_t k = static_cast<std::size_t>(it - x.begin());
            const std::size_t i0 = from_left ? std::clamp<std::size_t>(k, 2, n - 1) : std::min(k, n - 3);
            const std::size_t i1 = from_left ? i0 - 1 : i0 + 1;
            const std::size_t i2 = from_left ? i0 - 2 : i0 + 2;
            f0 = y[i0];
            f1 = y[i1];
            f2 = y[i2];
            h1 = x[i1] - x[i0];
            h2 = x[i2] - x[i0];
        } else {
            const double h = from_left ? -step : step;
            f0 = value_(s);
            f1 = value_(s + h);
            f2 = value_(s + 2.0 * h);
            h1 = h;
            h2 = 2.0 * h;
        }
        // derivative at x0 of the quadratic through (0,f0), (h1,f1), (h2,f2)
        const double second =
            -f0 * (h1 + h2) / (h1 * h2) + f1 * h2 / (h1 * (h2 - h1)) - f2 * h1 / (h2 * (h2 - h1));
        const double first = (f1 - f0) / h1;
        return {second, std::abs(second - first)};
    }

private:
    struct TableData {
        Vector coords;
        Vector values;

        double interpolate(double s) const {
            const double slack = 1e-12 * std::max(1.0, std::abs(coords.back() - coords.front()));
            if (s < coords.front() - slack || s > coords.back() + slack) {
                std::ostringstream os;
                os << "tabulated profile evaluated at " << s << " outside [" << coords.front()
                   << ", " << coords.back() << "]";
                throw ValidationError(os.str());
            }
            const auto it = std::upper_bound(coords.begin(), coords.end(), s);
            std::size_t k = static_cast<std::size_t>(it - coords.begin());
            k = std::clamp<std::size_t>(k, 1, coords.size() - 1);
            const double w = (s - coords[k - 1]) / (coords[k] - coords[k - 1]);
            return (1.0 - w) * values[k - 1] + w * values[k];
        }
    };
    Fn value_;
    Fn derivative_;
    std::shared_ptr<const TableData> table_;
    std::string label_;
};

/// Full definition of the direct/inverse problem on [0,L] x [0,T].
struct ProblemSpec {
    double wave_speed = 1.0;
    double length = 1.0;
    double horizon = 1.0;
    BoundaryKind boundary_kind = BoundaryKind::Dirichlet;
    Profile initial_displacement;  ///< u0(x)
    Profile initial_velocity;      ///< v0(x)
    Profile left_dirichlet;        ///< p0(t) = u(0,t)
    Profile right_data;            ///< p_L(t): u(L,t) if Dirichlet, u_x(L,t) if Neumann
    std::optional<Profile> measured_flux;  ///< q0(t) = u_x(0,t)
    /// Closed-form force and displacement, when the problem is an analytic benchmark.
    std::optional<std::function<double(double)>> exact_force;
    std::optional<std::function<double(double, double)>> exact_displacement;
};

/// Uniform space/time discretization.
class Grid {
public:
    Grid(double length, double horizon, int n_time, int n_space)
        : n_time_(n_time), n_space_(n_space), length_(length), horizon_(horizon) {
        if (n_time < 1 || n_space < 1) throw ValidationError("grid needs N >= 1 and M >= 1");
        if (!(length > 0.0) || !(horizon > 0.0))
            throw ValidationError("grid needs positive length and horizon");
        dt_ = horizon / n_time;
        dx_ = length / n_space;
    }

    Grid(const ProblemSpec& spec, int n_time, int n_space)
        : Grid(spec.length, spec.horizon, n_time, n_space) {}

    /// Space grid chosen so that c dt / dx = 1 when N L / (c T) is an integer.
    static Grid courant_matched(const ProblemSpec& spec, int n_time) {
        const double m = n_time * spec.length / (spec.wave_speed * spec.horizon);
        return Grid(spec, n_time, std::max(1, static_cast<int>(std::lround(m))));
    }

    int n_time() const noexcept { return n_time_; }
    int n_space() const noexcept { return n_space_; }
    double dt() const noexcept { return dt_; }
    double dx() const noexcept { return dx_; }
    double length() const noexcept { return length_; }
    double horizon() const noexcept { return horizon_; }

    /// t_n = n T / N
    double time(int n) const { return n * horizon_ / n_time_; }
    /// x_i = i L / M
    double node(int i) const { return i * length_ / n_space_; }

    double courant(double wave_speed) const { return wave_speed * dt_ / dx_; }

    Vector times() const {
        Vector t(static_cast<std::size_t>(n_time_));
        for (int n = 1; n <= n_time_; ++n) t[n - 1] = time(n);
        return t;
    }
    Vector nodes() const {
        Vector x(static_cast<std::size_t>(n_space_));
        for (int i = 1; i <= n_space_; ++i) x[i - 1] = node(i);
        return x;
    }

private:
    int n_time_;
    int n_space_;
    double length_;
    double horizon_;
    double dt_ = 0.0;
    double dx_ = 0.0;
};

/// Values on a tensor grid; values[n * xs.size() + i] = field(xs[i], ts[n]).
struct SampledField {
    Vector xs;
    Vector ts;
    Vector values;

    SampledField() = default;
    SampledField(Vector x, Vector t) : xs(std::move(x)), ts(std::move(t)), values(xs.size() * ts.size(), 0.0) {}

    double& at(std::size_t i, std::size_t n) { return values[n * xs.size() + i]; }
    double at(std::size_t i, std::size_t n) const { return values[n * xs.size() + i]; }
};

/// u = v + w on a common grid.
inline SampledField superpose(const SampledField& v, const SampledField& w) {
    if (v.xs != w.xs || v.ts != w.ts || v.values.size() != w.values.size())
        throw DimensionError("superpose: fields are sampled on different grids");
    SampledField u = v;
    for (std::size_t k = 0; k < u.values.size(); ++k) u.values[k] += w.values[k];
    return u;
}

struct Violation {
    std::string condition;
    double discrepancy;
    std::string message;
};

namespace detail {
inline bool close_relative(double a, double b, double tol, double slack = 0.0) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)}) + slack;
}
}  // namespace detail

/// Checks parameter positivity and the compatibility conditions
///   p0(0) = u0(0),  p_L(0) = mu u0(L) + (1 - mu) u0'(L),  q0(0) = u0'(0) (when q0 is given).
/// Returns one entry per violated condition; an empty list means the spec is valid.
inline std::vector<Violation> validate(const ProblemSpec& spec,
                                       double tolerance = tolerances::compatibility) {
    std::vector<Violation> out;
    auto positive = [&](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            std::ostringstream os;
            os << name << " must be positive and finite, got " << v;
            out.push_back({name, v, os.str()});
        }
    };
    positive(spec.wave_speed, "wave_speed");
    positive(spec.length, "length");
    positive(spec.horizon, "horizon");
    if (!out.empty()) return out;

    const double L = spec.length;
    const double fd_step = 1e-4 * L;
    auto report = [&](const char* name, double lhs, double rhs, double slack) {
        if (!detail::close_relative(lhs, rhs, tolerance, slack)) {
            std::ostringstream os;
            os.precision(17);
            os << name << " violated: " << lhs << " != " << rhs;
            out.push_back({name, std::abs(lhs - rhs), os.str()});
        }
    };

    report("left compatibility p0(0) = u0(0)", spec.left_dirichlet(0.0),
           spec.initial_displacement(0.0), 0.0);

    if (spec.boundary_kind == BoundaryKind::Dirichlet) {
        report("right compatibility pL(0) = u0(L)", spec.right_data(0.0),
               spec.initial_displacement(L), 0.0);
    } else {
        const auto s = spec.initial_displacement.slope(L, fd_step, true);
        report("right compatibility pL(0) = u0'(L)", spec.right_data(0.0), s.value,
               s.error_estimate);
    }
    if (spec.measured_flux) {
        const auto s = spec.initial_displacement.slope(0.0, fd_step, false);
        report("left flux compatibility q0(0) = u0'(0)", (*spec.measured_flux)(0.0), s.value,
               s.error_estimate);
    }
    return out;
}

}  // namespace forceid
