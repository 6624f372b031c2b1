#pragma once

// Boundary element method for the force-free 1D wave equation
//   v_tt = c^2 v_xx on (0,L) x (0,T]
// with piecewise-constant interpolation in time and space.
//
// Unknowns per time element n = 1..N are the four boundary values
//   v0[n] = v(0,t_n), vL[n] = v(L,t_n), dv0[n] = v_x(0,t_n), dvL[n] = v_x(L,t_n),
// linked by the two boundary integral equations at x = 0 and x = L:
//   v0_n + A dv0_n - B vL_n - D dvL_n = F
//   vL_n - A dvL_n - B v0_n + D dv0_n = G
// where F and G collect the history (elements j < n) and the initial data.
// Time element j covers (t_{j-1}, t_j]; space cell i covers (x_{i-1}, x_i].

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "forceid/errors.hpp"
#include "forceid/linalg.hpp"
#include "forceid/model.hpp"
#include "forceid/tolerances.hpp"

namespace forceid::bem {

using WarningSink = std::function<void(const std::string&)>;

/// Condition type imposed at one end of the string.
enum class EndCondition { Dirichlet, Neumann };

/// Direct problem data sampled on a grid.
struct DirectProblem {
    double wave_speed;
    double length;
    Grid grid;
    EndCondition left = EndCondition::Dirichlet;
    EndCondition right = EndCondition::Dirichlet;
    Vector left_values{};   ///< v(0,t_n) or v_x(0,t_n), n = 1..N
    Vector right_values{};  ///< v(L,t_n) or v_x(L,t_n), n = 1..N
    Vector displacement{};  ///< u0(x_i), i = 1..M
    Vector velocity{};      ///< v0(x_i), i = 1..M
};

struct BoundaryTraces {
    Vector t;
    Vector v0;
    Vector vL;
    Vector dv0;
    Vector dvL;

    BoundaryTraces() = default;
    explicit BoundaryTraces(const Grid& grid)
        : t(grid.times()),
          v0(t.size(), 0.0),
          vL(t.size(), 0.0),
          dv0(t.size(), 0.0),
          dvL(t.size(), 0.0) {}

    std::size_t size() const noexcept { return t.size(); }
};

struct StepCoefficients {
    double A = 0.0;
    double B = 0.0;
    double D = 0.0;
};

struct StepRhs {
    double F = 0.0;
    double G = 0.0;
};

namespace detail {

/// Position in units of `width`, snapped onto integers within tolerances::node_snap.
inline double snapped_units(double s, double width) {
    const double u = s / width;
    const double r = std::round(u);
    return std::abs(u - r) < tolerances::node_snap ? r : u;
}

}  // namespace detail

/// Integral of the j-th piecewise-constant time basis over [0, upper]:
/// the length of (t_{j-1}, t_j] intersected with (0, upper]. Zero when upper <= t_{j-1}.
inline double basis_time_integral(int j, double upper, const Grid& grid) {
    const double u = detail::snapped_units(upper, grid.dt());
    return grid.dt() * std::clamp(u - (j - 1), 0.0, 1.0);
}

/// Integral of the i-th piecewise-constant space basis over [lo, hi] clipped to [0, L].
inline double basis_space_integral(int i, double lo, double hi, const Grid& grid) {
    const double a = std::max(detail::snapped_units(std::max(lo, 0.0), grid.dx()), i - 1.0);
    const double b = std::min(detail::snapped_units(std::min(hi, grid.length()), grid.dx()),
                              static_cast<double>(i));
    return b > a ? (b - a) * grid.dx() : 0.0;
}

/// phi^j(s): 1 when s lies in (t_{j-1}, t_j], zero otherwise (including s outside (0, T]).
inline double time_basis(int j, double s, const Grid& grid) {
    const double u = detail::snapped_units(s, grid.dt());
    if (u <= 0.0 || u > grid.n_time()) return 0.0;
    return (u > j - 1 && u <= j) ? 1.0 : 0.0;
}

/// Index i of the cell (x_{i-1}, x_i] containing s, or nothing when s is outside (0, L].
inline std::optional<int> space_cell(double s, const Grid& grid) {
    const double u = detail::snapped_units(s, grid.dx());
    if (u <= 0.0 || u > grid.n_space()) return std::nullopt;
    return std::clamp(static_cast<int>(std::ceil(u)), 1, grid.n_space());
}

/// A, B, D of step n.
inline StepCoefficients step_coefficients(int n, const Grid& grid, double wave_speed,
                                          double length) {
    const double tn = grid.time(n);
    const double delayed = tn - length / wave_speed;
    return {wave_speed * basis_time_integral(n, tn, grid), time_basis(n, delayed, grid),
            wave_speed * basis_time_integral(n, delayed, grid)};
}

namespace detail {

/// Initial-data contributions and piecewise-constant expansions of u0, v0.
class InitialData {
public:
    explicit InitialData(const DirectProblem& p)
        : grid_(p.grid), c_(p.wave_speed), u0_(p.displacement), v0_(p.velocity) {
        const auto m = static_cast<std::size_t>(grid_.n_space());
        if (u0_.size() != m || v0_.size() != m)
            throw DimensionError("initial samples must have one value per space cell");
        prefix_.assign(m + 1, 0.0);
        for (std::size_t i = 0; i < m; ++i) prefix_[i + 1] = prefix_[i] + v0_[i] * grid_.dx();
    }

    /// sum_i psi_i(s) u0_i
    double displacement_at(double s) const {
        const auto cell = space_cell(s, grid_);
        return cell ? u0_[static_cast<std::size_t>(*cell - 1)] : 0.0;
    }

    /// (1/c) * integral over [lo, hi] of sum_i psi_i(x) v0_i, clipped to [0, L]
    double velocity_integral(double lo, double hi) const {
        lo = std::max(lo, 0.0);
        hi = std::min(hi, grid_.length());
        if (!(hi > lo)) return 0.0;
        return (antiderivative(hi) - antiderivative(lo)) / c_;
    }

private:
    double antiderivative(double s) const {
        const double u = snapped_units(s, grid_.dx());
        const int m = grid_.n_space();
        const int k = std::clamp(static_cast<int>(std::floor(u)), 0, m);
        double g = prefix_[static_cast<std::size_t>(k)];
        if (k < m) g += v0_[static_cast<std::size_t>(k)] * (u - k) * grid_.dx();
        return g;
    }

    const Grid& grid_;
    double c_;
    const Vector& u0_;
    const Vector& v0_;
    Vector prefix_;
};

/// Right-hand sides of the two boundary equations that involve only initial data.
inline StepRhs initial_terms(int n, const DirectProblem& p, const InitialData& init) {
    const double ctn = p.wave_speed * p.grid.time(n);
    return {init.displacement_at(ctn) + init.velocity_integral(0.0, ctn),
            init.displacement_at(p.length - ctn) +
                init.velocity_integral(p.length - ctn, p.length)};
}

inline void check_problem(const DirectProblem& p) {
    const auto n = static_cast<std::size_t>(p.grid.n_time());
    if (p.left_values.size() != n || p.right_values.size() != n)
        throw DimensionError("boundary data must have one value per time element");
    if (!(p.wave_speed > 0.0) || !(p.length > 0.0))
        throw ValidationError("wave speed and length must be positive");
}

inline void check_denominator(int n, double den, double a, const char* name) {
    if (std::abs(den) < tolerances::step_singularity * std::max(a * a, 1.0)) {
        std::ostringstream os;
        os << "singular BEM step " << n << ": |" << name << "| = " << std::abs(den);
        throw SingularStepError(n, os.str());
    }
}

inline void add_history(int n, const DirectProblem& p, const BoundaryTraces& tr, StepRhs& rhs) {
    const double c = p.wave_speed;
    const double tn = p.grid.time(n);
    const double delayed = tn - p.length / c;
    for (int j = 1; j < n; ++j) {
        const auto k = static_cast<std::size_t>(j - 1);
        const double phi = time_basis(j, delayed, p.grid);
        const double full = basis_time_integral(j, tn, p.grid);
        const double late = basis_time_integral(j, delayed, p.grid);
        rhs.F += phi * tr.vL[k] + c * tr.dvL[k] * late - c * tr.dv0[k] * full;
        rhs.G += phi * tr.v0[k] + c * tr.dvL[k] * full - c * tr.dv0[k] * late;
    }
}

}  // namespace detail

/// F and G of step n from the traces of elements 1..n-1 and the initial data.
inline StepRhs assemble_rhs(int n, const DirectProblem& p, const BoundaryTraces& traces) {
    const detail::InitialData init(p);
    StepRhs rhs = detail::initial_terms(n, p, init);
    detail::add_history(n, p, traces, rhs);
    return rhs;
}

namespace detail {

// Shared time loop; `step` fills element n of the traces from (A,B,D), (F,G).
template <typename Step>
BoundaryTraces march_with(const DirectProblem& p, Step&& step) {
    check_problem(p);
    const InitialData init(p);
    BoundaryTraces tr(p.grid);
    for (int n = 1; n <= p.grid.n_time(); ++n) {
        const auto coeff = step_coefficients(n, p.grid, p.wave_speed, p.length);
        StepRhs rhs = initial_terms(n, p, init);
        add_history(n, p, tr, rhs);
        step(n, static_cast<std::size_t>(n - 1), coeff, rhs, tr);
    }
    return tr;
}

}  // namespace detail

/// Dirichlet data at both ends; the fluxes follow from Cramer's rule.
inline BoundaryTraces march_dirichlet(const DirectProblem& p) {
    if (p.left != EndCondition::Dirichlet || p.right != EndCondition::Dirichlet)
        throw ValidationError("march_dirichlet needs Dirichlet data at both ends");
    return detail::march_with(p, [&](int n, std::size_t k, const StepCoefficients& s,
                                     const StepRhs& r, BoundaryTraces& tr) {
        const double p0 = p.left_values[k];
        const double pL = p.right_values[k];
        const double Ft = r.F - p0 + s.B * pL;
        const double Gt = r.G - pL + s.B * p0;
        const double den = s.D * s.D - s.A * s.A;
        detail::check_denominator(n, den, s.A, "D^2 - A^2");
        tr.v0[k] = p0;
        tr.vL[k] = pL;
        tr.dv0[k] = (s.D * Gt - s.A * Ft) / den;
        tr.dvL[k] = (s.A * Gt - s.D * Ft) / den;
    });
}

/// Dirichlet data at x = 0, Neumann data at x = L.
inline BoundaryTraces march_mixed(const DirectProblem& p) {
    if (p.left != EndCondition::Dirichlet || p.right != EndCondition::Neumann)
        throw ValidationError("march_mixed needs Dirichlet data at x=0 and Neumann data at x=L");
    return detail::march_with(p, [&](int n, std::size_t k, const StepCoefficients& s,
                                     const StepRhs& r, BoundaryTraces& tr) {
        const double p0 = p.left_values[k];
        const double pL = p.right_values[k];
        const double Ft = r.F - p0 + s.D * pL;
        const double Gt = r.G + s.B * p0 + s.A * pL;
        const double den = s.A + s.D * s.B;
        detail::check_denominator(n, den, s.A, "A + D B");
        tr.v0[k] = p0;
        tr.dvL[k] = pL;
        tr.dv0[k] = (Ft + s.B * Gt) / den;
        tr.vL[k] = (s.A * Gt - s.D * Ft) / den;
    });
}

/// Neumann data at x = 0, Dirichlet data at x = L (the direct problem behind Dirichlet control).
inline BoundaryTraces march_flux_dirichlet(const DirectProblem& p) {
    if (p.left != EndCondition::Neumann || p.right != EndCondition::Dirichlet)
        throw ValidationError(
            "march_flux_dirichlet needs Neumann data at x=0 and Dirichlet data at x=L");
    return detail::march_with(p, [&](int n, std::size_t k, const StepCoefficients& s,
                                     const StepRhs& r, BoundaryTraces& tr) {
        const double q0 = p.left_values[k];
        const double pL = p.right_values[k];
        //  v0_n - D dvL_n = F - A q0 + B pL
        // -B v0_n - A dvL_n = G - pL - D q0
        const double F1 = r.F - s.A * q0 + s.B * pL;
        const double G1 = r.G - pL - s.D * q0;
        const double den = s.A + s.B * s.D;
        detail::check_denominator(n, den, s.A, "A + B D");
        tr.dv0[k] = q0;
        tr.vL[k] = pL;
        tr.v0[k] = (s.A * F1 - s.D * G1) / den;
        tr.dvL[k] = -(G1 + s.B * F1) / den;
    });
}

/// Dispatches on the end conditions.
inline BoundaryTraces march(const DirectProblem& p) {
    if (p.left == EndCondition::Dirichlet)
        return p.right == EndCondition::Dirichlet ? march_dirichlet(p) : march_mixed(p);
    if (p.right == EndCondition::Dirichlet) return march_flux_dirichlet(p);
    throw ValidationError("Neumann data at both ends is not supported");
}

/// All N steps assembled into one 2N x 2N system and solved by Gaussian elimination.
inline BoundaryTraces solve_global(const DirectProblem& p) {
    detail::check_problem(p);
    if (p.left == EndCondition::Neumann && p.right == EndCondition::Neumann)
        throw ValidationError("Neumann data at both ends is not supported");
    const int N = p.grid.n_time();
    const auto sz = static_cast<std::size_t>(N);
    const double c = p.wave_speed;
    const detail::InitialData init(p);

    // full variable layout: [v0 | vL | dv0 | dvL], each block of length N
    enum Block { V0 = 0, VL = 1, DV0 = 2, DVL = 3 };
    auto var = [&](Block b, int j) { return static_cast<std::size_t>(b) * sz + (j - 1); };

    DenseMatrix full(2 * sz, 4 * sz);
    Vector rhs(2 * sz);
    for (int n = 1; n <= N; ++n) {
        const std::size_t ra = static_cast<std::size_t>(n - 1);
        const std::size_t rb = sz + ra;
        const double tn = p.grid.time(n);
        const double delayed = tn - p.length / c;
        full(ra, var(V0, n)) += 1.0;
        full(rb, var(VL, n)) += 1.0;
        for (int j = 1; j <= n; ++j) {
            const double phi = time_basis(j, delayed, p.grid);
            const double whole = c * basis_time_integral(j, tn, p.grid);
            const double late = c * basis_time_integral(j, delayed, p.grid);
            full(ra, var(DV0, j)) += whole;
            full(ra, var(DVL, j)) -= late;
            full(ra, var(VL, j)) -= phi;
            full(rb, var(DVL, j)) -= whole;
            full(rb, var(DV0, j)) += late;
            full(rb, var(V0, j)) -= phi;
        }
        const auto s = detail::initial_terms(n, p, init);
        rhs[ra] = s.F;
        rhs[rb] = s.G;
    }

    const Block left_known = p.left == EndCondition::Dirichlet ? V0 : DV0;
    const Block left_unknown = p.left == EndCondition::Dirichlet ? DV0 : V0;
    const Block right_known = p.right == EndCondition::Dirichlet ? VL : DVL;
    const Block right_unknown = p.right == EndCondition::Dirichlet ? DVL : VL;

    DenseMatrix sys(2 * sz, 2 * sz);
    for (std::size_t r = 0; r < 2 * sz; ++r) {
        for (int j = 1; j <= N; ++j) {
            const auto k = static_cast<std::size_t>(j - 1);
            rhs[r] -= full(r, var(left_known, j)) * p.left_values[k];
            rhs[r] -= full(r, var(right_known, j)) * p.right_values[k];
            sys(r, k) = full(r, var(left_unknown, j));
            sys(r, sz + k) = full(r, var(right_unknown, j));
        }
    }

    Vector x;
    try {
        x = solve_ge(sys, rhs);
    } catch (const SingularMatrixError& e) {
        const auto sv = svd(sys).values;
        std::ostringstream os;
        os << "global BEM system is singular (" << e.what() << "); condition estimate "
           << (sv.back() > 0.0 ? sv.front() / sv.back() : INFINITY);
        throw SingularMatrixError(os.str());
    }

    BoundaryTraces tr(p.grid);
    auto block = [&](Block b) -> Vector& {
        switch (b) {
            case V0: return tr.v0;
            case VL: return tr.vL;
            case DV0: return tr.dv0;
            default: return tr.dvL;
        }
    };
    for (std::size_t k = 0; k < sz; ++k) {
        block(left_known)[k] = p.left_values[k];
        block(right_known)[k] = p.right_values[k];
        block(left_unknown)[k] = x[k];
        block(right_unknown)[k] = x[sz + k];
    }
    return tr;
}

/// v(xi, t_n) for 0 < xi < L from the boundary traces and the initial data.
inline double interior_solution(const BoundaryTraces& tr, const DirectProblem& p, double xi,
                                int n) {
    if (!(xi > 0.0 && xi < p.length))
        throw ValidationError("interior point must lie strictly inside (0, L)");
    if (n < 1 || n > p.grid.n_time()) throw ValidationError("time index out of range");
    const detail::InitialData init(p);
    const double c = p.wave_speed;
    const double tn = p.grid.time(n);
    const double from_right = tn - (p.length - xi) / c;
    const double from_left = tn - xi / c;
    double twice = 0.0;
    for (int j = 1; j <= n; ++j) {
        const auto k = static_cast<std::size_t>(j - 1);
        twice += time_basis(j, from_right, p.grid) * tr.vL[k] +
                 time_basis(j, from_left, p.grid) * tr.v0[k];
        twice += c * (tr.dvL[k] * basis_time_integral(j, from_right, p.grid) -
                      tr.dv0[k] * basis_time_integral(j, from_left, p.grid));
    }
    twice += init.displacement_at(xi - c * tn) + init.displacement_at(xi + c * tn);
    twice += init.velocity_integral(xi - c * tn, xi + c * tn);
    return 0.5 * twice;
}

/// v on the tensor grid xs x {t_n : n in steps}.
inline SampledField interior_field(const BoundaryTraces& tr, const DirectProblem& p,
                                   const Vector& xs, const std::vector<int>& steps) {
    Vector ts;
    ts.reserve(steps.size());
    for (int n : steps) ts.push_back(p.grid.time(n));
    SampledField field(xs, ts);
    for (std::size_t a = 0; a < steps.size(); ++a)
        for (std::size_t i = 0; i < xs.size(); ++i)
            field.at(i, a) = interior_solution(tr, p, xs[i], steps[a]);
    return field;
}

/// Affine shift v = v~ + slope * x + offset.
struct AffineShift {
    double slope = 0.0;
    double offset = 0.0;

    bool is_identity() const noexcept { return slope == 0.0 && offset == 0.0; }

    void restore(BoundaryTraces& tr, double length) const {
        for (std::size_t k = 0; k < tr.size(); ++k) {
            tr.v0[k] += offset;
            tr.vL[k] += slope * length + offset;
            tr.dv0[k] += slope;
            tr.dvL[k] += slope;
        }
    }
    double restore(double value, double x) const { return value + slope * x + offset; }
};

struct LiftedSpec {
    ProblemSpec spec;
    AffineShift shift;
};

/// Rewrites the problem for v~ = v - [(u0(L) - u0(0))/L] x - u0(0), which vanishes at
/// both ends at t = 0, and records the shift needed to undo it.
inline LiftedSpec lift_initial(const ProblemSpec& spec) {
    const double a = spec.initial_displacement(0.0);
    const double s = (spec.initial_displacement(spec.length) - a) / spec.length;
    LiftedSpec out{spec, {s, a}};
    if (s == 0.0 && a == 0.0) return out;

    auto shifted = [](const Profile& f, std::function<double(double)> delta, double dslope,
                      const std::string& tag) {
        return Profile::closed_form([f, delta](double x) { return f(x) - delta(x); },
                                    f.has_derivative()
                                        ? Profile::Fn([f, dslope](double x) {
                                              return f.slope(x, 0.0, false).value - dslope;
                                          })
                                        : Profile::Fn{},
                                    f.label() + tag);
    };
    const double L = spec.length;
    out.spec.initial_displacement =
        shifted(spec.initial_displacement, [s, a](double x) { return s * x + a; }, s, " (lifted)");
    out.spec.left_dirichlet = shifted(spec.left_dirichlet, [a](double) { return a; }, 0.0,
                                      " (lifted)");
    if (spec.boundary_kind == BoundaryKind::Dirichlet)
        out.spec.right_data = shifted(spec.right_data, [s, a, L](double) { return s * L + a; },
                                      0.0, " (lifted)");
    else
        out.spec.right_data = shifted(spec.right_data, [s](double) { return s; }, 0.0, " (lifted)");
    if (spec.measured_flux)
        out.spec.measured_flux =
            shifted(*spec.measured_flux, [s](double) { return s; }, 0.0, " (lifted)");
    if (spec.exact_displacement) {
        auto u = *spec.exact_displacement;
        out.spec.exact_displacement = [u, s, a](double x, double t) { return u(x, t) - s * x - a; };
    }
    return out;
}

/// Samples the direct problem for v. NeumannControl uses p0 at x = 0, DirichletControl the flux q0.
inline DirectProblem sample_direct(const ProblemSpec& spec, const Grid& grid, ControlKind control) {
    DirectProblem p{spec.wave_speed, spec.length, grid};
    p.right = spec.boundary_kind == BoundaryKind::Dirichlet ? EndCondition::Dirichlet
                                                            : EndCondition::Neumann;
    const Profile* left = &spec.left_dirichlet;
    if (control == ControlKind::DirichletControl) {
        if (!spec.measured_flux)
            throw ValidationError("Dirichlet control needs the flux q0 for the direct problem");
        left = &*spec.measured_flux;
        p.left = EndCondition::Neumann;
    }
    const auto ts = grid.times();
    const auto xs = grid.nodes();
    p.left_values.resize(ts.size());
    p.right_values.resize(ts.size());
    for (std::size_t k = 0; k < ts.size(); ++k) {
        p.left_values[k] = (*left)(ts[k]);
        p.right_values[k] = spec.right_data(ts[k]);
    }
    p.displacement.resize(xs.size());
    p.velocity.resize(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        p.displacement[i] = spec.initial_displacement(xs[i]);
        p.velocity[i] = spec.initial_velocity(xs[i]);
    }
    return p;
}

enum class Method { Marching, Global };

/// Direct solve with automatic lifting when u0 does not vanish at the ends.
struct DirectSolution {
    DirectProblem problem;         ///< lifted problem actually solved
    BoundaryTraces lifted_traces;  ///< traces of the lifted problem
    BoundaryTraces traces;         ///< traces of v itself
    AffineShift shift;

    double interior(double xi, int n) const {
        return shift.restore(interior_solution(lifted_traces, problem, xi, n), xi);
    }

    SampledField interior_field(const Vector& xs, const std::vector<int>& steps) const {
        auto field = bem::interior_field(lifted_traces, problem, xs, steps);
        for (std::size_t a = 0; a < field.ts.size(); ++a)
            for (std::size_t i = 0; i < xs.size(); ++i)
                field.at(i, a) = shift.restore(field.at(i, a), xs[i]);
        return field;
    }
};

inline DirectSolution solve_direct(const ProblemSpec& spec, const Grid& grid, ControlKind control,
                                   Method method = Method::Marching,
                                   const WarningSink& warn = {}) {
    const double courant = grid.courant(spec.wave_speed);
    if (warn && std::abs(courant - 1.0) > tolerances::courant) {
        std::ostringstream os;
        os << "Courant number c*dt/dx = " << courant << " differs from 1";
        warn(os.str());
    }
    auto lifted = lift_initial(spec);
    auto problem = sample_direct(lifted.spec, grid, control);
    auto lifted_traces = method == Method::Marching ? march(problem) : solve_global(problem);
    auto traces = lifted_traces;
    lifted.shift.restore(traces, spec.length);
    return {std::move(problem), std::move(lifted_traces), std::move(traces), lifted.shift};
}

}  // namespace forceid::bem
