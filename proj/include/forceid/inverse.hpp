#pragma once

// Separation-of-variables inverse solver for the space-dependent force.
//
// The force-driven part w of the displacement is expanded as
//   w_K(x,t) = (sqrt2 / c^2) sum_k b_k / lambda_k^2 (1 - cos(c lambda_k t)) X_k(x),
//   f_K(x)   =  sqrt2        sum_k b_k X_k(x),
// with X_k = sin (flux measured at x = 0) or cos (displacement measured at x = 0).
// Matching the boundary measurement at t_1..t_N gives the linear system Q b = data,
// solved in the Tikhonov-regularized least-squares sense.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "forceid/bem.hpp"
#include "forceid/errors.hpp"
#include "forceid/linalg.hpp"
#include "forceid/model.hpp"

namespace forceid {

/// lambda_k = k pi / L for a Dirichlet end at x = L, (k - 1/2) pi / L for a Neumann end.
inline double eigenvalue(int k, double length, BoundaryKind kind) {
    if (k < 1) throw ValidationError("mode index must be >= 1");
    const double shift = kind == BoundaryKind::Dirichlet ? 0.0 : 0.5;
    return (k - shift) * std::numbers::pi / length;
}

/// Collocation matrix of the series against the boundary measurement.
struct DesignMatrix {
    DenseMatrix entries;  ///< N x K
    ControlKind control = ControlKind::NeumannControl;
    Vector eigenvalues;   ///< lambda_k, k = 1..K
    double wave_speed = 1.0;

    std::size_t rows() const noexcept { return entries.rows(); }
    std::size_t modes() const noexcept { return entries.cols(); }
};

/// Modes used for the given control: sine modes follow the x = L condition, cosine modes
/// always use lambda_k = (k - 1/2) pi / L.
inline Vector mode_eigenvalues(int modes, ControlKind control, const ProblemSpec& spec) {
    Vector lam(static_cast<std::size_t>(modes));
    const BoundaryKind kind =
        control == ControlKind::NeumannControl ? spec.boundary_kind : BoundaryKind::Neumann;
    for (int k = 1; k <= modes; ++k) lam[k - 1] = eigenvalue(k, spec.length, kind);
    return lam;
}

/// Q_nk = sqrt2 (1 - cos(c lambda_k t_n)) / (c^2 lambda_k^p), p = 1 (flux data) or 2 (displacement data).
inline DesignMatrix assemble_design_matrix(const Grid& grid, int modes, ControlKind control,
                                           const ProblemSpec& spec,
                                           const bem::WarningSink& warn = {}) {
    if (modes < 1) throw ValidationError("number of modes K must be >= 1");
    if (warn && modes > grid.n_time()) {
        std::ostringstream os;
        os << "K = " << modes << " exceeds the number of measurements N = " << grid.n_time();
        warn(os.str());
    }
    if (warn && control == ControlKind::DirichletControl &&
        spec.boundary_kind == BoundaryKind::Neumann)
        warn("cosine modes assume a Dirichlet condition at x = L");

    DesignMatrix q;
    q.control = control;
    q.wave_speed = spec.wave_speed;
    q.eigenvalues = mode_eigenvalues(modes, control, spec);
    q.entries = DenseMatrix(static_cast<std::size_t>(grid.n_time()), static_cast<std::size_t>(modes));
    const double c = spec.wave_speed;
    const int power = control == ControlKind::NeumannControl ? 1 : 2;
    for (int n = 1; n <= grid.n_time(); ++n) {
        const double t = grid.time(n);
        for (int k = 1; k <= modes; ++k) {
            const double lam = q.eigenvalues[k - 1];
            q.entries(n - 1, k - 1) = std::numbers::sqrt2 * (1.0 - std::cos(c * lam * t)) /
                                      (c * c * std::pow(lam, power));
        }
    }
    return q;
}

/// sigma_max / sigma_min of Q; +infinity when Q is rank deficient.
inline double condition_number(const DenseMatrix& q) {
    const auto sv = svd(q).values;
    if (sv.empty() || sv.front() == 0.0) throw ValidationError("condition_number: zero matrix");
    return sv.back() > 0.0 ? sv.front() / sv.back() : std::numeric_limits<double>::infinity();
}

/// Condition number of the normal-equations matrix Q^T Q, i.e. condition_number(Q)^2.
inline double normal_condition_number(const DenseMatrix& q) {
    const double c = condition_number(q);
    return c * c;
}

enum class RegularizationOrder { Zeroth = 0, First = 1, Second = 2 };

struct RegularizationConfig {
    double lambda = 0.0;
    RegularizationOrder order = RegularizationOrder::Zeroth;
};

/// Identity, (K-1) x K first differences or (K-2) x K second differences.
inline DenseMatrix penalty_operator(RegularizationOrder order, std::size_t modes) {
    switch (order) {
        case RegularizationOrder::Zeroth:
            return DenseMatrix::identity(modes);
        case RegularizationOrder::First: {
            DenseMatrix r(modes > 1 ? modes - 1 : 0, modes);
            for (std::size_t i = 0; i + 1 < modes; ++i) {
                r(i, i) = -1.0;
                r(i, i + 1) = 1.0;
            }
            return r;
        }
        case RegularizationOrder::Second: {
            DenseMatrix r(modes > 2 ? modes - 2 : 0, modes);
            for (std::size_t i = 0; i + 2 < modes; ++i) {
                r(i, i) = 1.0;
                r(i, i + 1) = -2.0;
                r(i, i + 2) = 1.0;
            }
            return r;
        }
    }
    throw ValidationError("unknown regularization order");
}

struct RegularizedSolution {
    Vector b;
    double residual_norm = 0.0;  ///< ||Q b - data||
    double solution_norm = 0.0;  ///< ||b||
    double penalty_norm = 0.0;   ///< ||R b||
    RegularizationConfig config;
};

/// Minimizes ||Q b - data||^2 + lambda ||R b||^2 through the normal equations
/// (Q^T Q + lambda R^T R) b = Q^T data, factored by Cholesky.
inline RegularizedSolution tikhonov_solve(const DenseMatrix& q, std::span<const double> data,
                                          const RegularizationConfig& config) {
    if (data.size() != q.rows())
        throw DimensionError("tikhonov_solve: data length does not match the number of rows of Q");
    if (!(config.lambda >= 0.0)) throw ValidationError("regularization parameter must be >= 0");

    DenseMatrix normal = gram(q);
    const DenseMatrix r = penalty_operator(config.order, q.cols());
    if (config.lambda > 0.0) {
        const DenseMatrix rtr = gram(r);
        for (std::size_t i = 0; i < q.cols(); ++i)
            for (std::size_t j = 0; j < q.cols(); ++j) normal(i, j) += config.lambda * rtr(i, j);
    }
    const Vector rhs = multiply_transposed(q, data);

    RegularizedSolution sol;
    sol.config = config;
    try {
        sol.b = solve_spd(normal, rhs);
    } catch (const NotPositiveDefiniteError& e) {
        std::ostringstream os;
        os << "normal equations are numerically singular at lambda = " << config.lambda << " ("
           << e.what() << ")";
        if (config.lambda == 0.0) os << "; use a positive regularization parameter";
        throw NotPositiveDefiniteError(os.str());
    }
    sol.residual_norm = norm2(subtract(multiply(q, sol.b), data));
    sol.solution_norm = norm2(sol.b);
    sol.penalty_norm = norm2(multiply(r, sol.b));
    return sol;
}

inline RegularizedSolution tikhonov_solve(const DesignMatrix& q, std::span<const double> data,
                                          const RegularizationConfig& config) {
    return tikhonov_solve(q.entries, data, config);
}

/// f_K(x) = sqrt2 sum_k b_k X_k(x) at the given points.
inline Vector reconstruct_force(std::span<const double> b, std::span<const double> eigenvalues,
                                ControlKind control, std::span<const double> xs) {
    if (b.size() != eigenvalues.size())
        throw DimensionError("reconstruct_force: coefficient/eigenvalue length mismatch");
    Vector f(xs.size(), 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < b.size(); ++k) {
            const double arg = eigenvalues[k] * xs[i];
            s += b[k] * (control == ControlKind::NeumannControl ? std::sin(arg) : std::cos(arg));
        }
        f[i] = std::numbers::sqrt2 * s;
    }
    return f;
}

namespace detail {

template <typename Mode>
SampledField series_field(std::span<const double> b, std::span<const double> eigenvalues,
                          double wave_speed, const Vector& xs, const Vector& ts, Mode&& mode) {
    if (b.size() != eigenvalues.size())
        throw DimensionError("series field: coefficient/eigenvalue length mismatch");
    SampledField w(xs, ts);
    const double c = wave_speed;
    for (std::size_t n = 0; n < ts.size(); ++n) {
        for (std::size_t i = 0; i < xs.size(); ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < b.size(); ++k) {
                const double lam = eigenvalues[k];
                s += b[k] / (lam * lam) * (1.0 - std::cos(c * lam * ts[n])) * mode(lam, xs[i]);
            }
            w.at(i, n) = std::numbers::sqrt2 / (c * c) * s;
        }
    }
    return w;
}

}  // namespace detail

/// w_K(x,t) on the tensor grid xs x ts.
inline SampledField reconstruct_w(std::span<const double> b, std::span<const double> eigenvalues,
                                  ControlKind control, double wave_speed, const Vector& xs,
                                  const Vector& ts) {
    const bool sine = control == ControlKind::NeumannControl;
    return detail::series_field(b, eigenvalues, wave_speed, xs, ts, [sine](double lam, double x) {
        return sine ? std::sin(lam * x) : std::cos(lam * x);
    });
}

/// d/dx w_K(x,t) on the tensor grid xs x ts.
inline SampledField reconstruct_w_dx(std::span<const double> b, std::span<const double> eigenvalues,
                                     ControlKind control, double wave_speed, const Vector& xs,
                                     const Vector& ts) {
    const bool sine = control == ControlKind::NeumannControl;
    return detail::series_field(b, eigenvalues, wave_speed, xs, ts, [sine](double lam, double x) {
        return sine ? lam * std::cos(lam * x) : -lam * std::sin(lam * x);
    });
}

/// g(t_n) = q0(t_n) - v_x(0,t_n) (flux control) or h(t_n) = p0(t_n) - v(0,t_n) (displacement control).
inline Vector inverse_data(ControlKind control, const bem::BoundaryTraces& traces,
                           std::span<const double> measured) {
    const Vector& direct = control == ControlKind::NeumannControl ? traces.dv0 : traces.v0;
    if (measured.size() != direct.size())
        throw DimensionError("inverse_data: measurement length does not match the traces");
    return subtract(measured, direct);
}

/// Clean measurement at t_1..t_N: q0 for flux control, p0 for displacement control.
inline Vector measurement(ControlKind control, const ProblemSpec& spec, const Grid& grid) {
    const Profile* source = &spec.left_dirichlet;
    if (control == ControlKind::NeumannControl) {
        if (!spec.measured_flux) throw ValidationError("flux control needs the measured flux q0");
        source = &*spec.measured_flux;
    }
    Vector out;
    for (double t : grid.times()) out.push_back((*source)(t));
    return out;
}

inline Vector inverse_data(ControlKind control, const bem::BoundaryTraces& traces,
                           const ProblemSpec& spec, const Grid& grid) {
    return inverse_data(control, traces, measurement(control, spec, grid));
}

/// Closed-form series coefficients of the benchmark force f(x) = 1 + pi^2 sin(pi x) on [0,1]:
/// sine coefficients against sin(k pi x), cosine coefficients against cos((k - 1/2) pi x).
inline Vector analytic_coefficients(ControlKind control, int modes) {
    using std::numbers::pi;
    using std::numbers::sqrt2;
    Vector b(static_cast<std::size_t>(std::max(modes, 0)), 0.0);
    for (int k = 1; k <= modes; ++k) {
        double v;
        if (control == ControlKind::NeumannControl) {
            if (k == 1)
                v = 2.0 * sqrt2 / pi + pi * pi / sqrt2;
            else
                v = k % 2 == 0 ? 0.0 : 2.0 * sqrt2 / (k * pi);
        } else if (k == 1) {
            v = 2.0 * sqrt2 * (2.0 * pi * pi + 3.0) / (3.0 * pi);
        } else {
            const double kk = k;
            const double sign = k % 2 == 0 ? 1.0 : -1.0;
            v = -2.0 * sqrt2 * (2.0 * pi * pi * (2.0 * kk - 1.0) + sign * (4.0 * kk * kk - 4.0 * kk - 3.0)) /
                (pi * (8.0 * kk * kk * kk - 12.0 * kk * kk - 2.0 * kk + 3.0));
        }
        b[k - 1] = v;
    }
    return b;
}

/// Euclidean norm of the pointwise difference.
inline double error_norm(std::span<const double> numerical, std::span<const double> exact) {
    if (numerical.size() != exact.size()) throw DimensionError("error_norm: length mismatch");
    return norm2(subtract(numerical, exact));
}

/// Axes on which the L-curve corner is located.
enum class CurveAxes { Linear, Log };

struct LCurvePoint {
    double lambda;
    double residual_norm;
    double solution_norm;
    double penalty_norm;
    double curvature;  ///< 0 at the end points
};

struct LCurve {
    std::vector<LCurvePoint> points;
    std::size_t corner = 0;
    std::vector<std::string> warnings;

    double corner_lambda() const { return points.at(corner).lambda; }
};

/// Signed curvature of the circle through three points; positive for a counter-clockwise turn.
inline double circle_curvature(double ax, double ay, double bx, double by, double cx, double cy) {
    const double cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
    const double d = std::hypot(bx - ax, by - ay) * std::hypot(cx - bx, cy - by) *
                     std::hypot(cx - ax, cy - ay);
    return d > 0.0 ? 2.0 * cross / d : 0.0;
}

/// Residual/solution norms over an ascending lambda grid and the corner of the curve.
///
/// Each axis is rescaled to [0,1] over the sampled range before measuring curvature, and the
/// corner is the point of largest positive (convex) three-point curvature.
inline LCurve lcurve(const DenseMatrix& q, std::span<const double> data,
                     std::span<const double> lambdas,
                     RegularizationOrder order = RegularizationOrder::Zeroth,
                     CurveAxes axes = CurveAxes::Linear) {
    if (lambdas.empty()) throw ValidationError("lcurve: empty lambda grid");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] > 0.0)) throw ValidationError("lcurve: lambda values must be positive");
        if (i > 0 && !(lambdas[i] > lambdas[i - 1]))
            throw ValidationError("lcurve: lambda values must be strictly ascending");
    }
    LCurve out;
    for (double lam : lambdas) {
        const auto sol = tikhonov_solve(q, data, {lam, order});
        out.points.push_back({lam, sol.residual_norm, sol.solution_norm, sol.penalty_norm, 0.0});
    }
    const std::size_t n = out.points.size();
    if (n < 3) {
        out.warnings.push_back("L-curve has fewer than three points; corner is degenerate");
        return out;
    }

    Vector xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = out.points[i].residual_norm;
        ys[i] = out.points[i].solution_norm;
        if (axes == CurveAxes::Log) {
            xs[i] = std::log(xs[i]);
            ys[i] = std::log(ys[i]);
        }
    }
    auto rescale = [](Vector& v) {
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        const double a = *lo;
        const double span = *hi - *lo;
        if (span > 0.0)
            for (double& e : v) e = (e - a) / span;
    };
    rescale(xs);
    rescale(ys);

    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double k =
            circle_curvature(xs[i - 1], ys[i - 1], xs[i], ys[i], xs[i + 1], ys[i + 1]);
        out.points[i].curvature = std::isfinite(k) ? k : 0.0;
        if (out.points[i].curvature > best) {
            best = out.points[i].curvature;
            out.corner = i;
        }
    }
    if (!(best > 0.0)) out.warnings.push_back("L-curve has no convex corner");
    return out;
}

/// Default lambda grid: 40 logarithmically spaced values in [1e-6, 1e1].
inline Vector default_lambda_grid(std::size_t count = 40, double lo = 1e-6, double hi = 1e1) {
    Vector out(count);
    if (count == 1) return {lo};
    const double a = std::log10(lo);
    const double step = (std::log10(hi) - a) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) out[i] = std::pow(10.0, a + step * static_cast<double>(i));
    return out;
}

/// Coarse hand-picked lambda set in [1e-3, 1], ascending.
inline Vector coarse_lambda_samples() {
    return {1e-3, 1e-2, 2e-2, 4e-2, 5e-2, 6e-2, 8e-2, 1e-1, 0.2, 0.3,
            0.4,  0.5,  0.6,  0.7,  0.8,  0.9,  1.0};
}

}  // namespace forceid
