#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "forceid/inverse.hpp"
#include "forceid/registry.hpp"

using namespace forceid;
using std::numbers::pi;

namespace {

DenseMatrix random_matrix(std::size_t r, std::size_t c, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    DenseMatrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) = u(gen);
    return m;
}

double benchmark_force(double x) { return 1.0 + pi * pi * std::sin(pi * x); }

// sqrt2 * integral_0^1 f(x) X(x) dx by composite Simpson
template <typename Mode>
double projected(Mode&& mode) {
    const int n = 4000;
    const double h = 1.0 / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double x = i * h;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        s += w * benchmark_force(x) * mode(x);
    }
    return std::numbers::sqrt2 * s * h / 3.0;
}

double objective(const DenseMatrix& q, const Vector& d, const DenseMatrix& r, double lam,
                 const Vector& b) {
    const double res = norm2(subtract(multiply(q, b), d));
    const double pen = norm2(multiply(r, b));
    return res * res + lam * pen * pen;
}

}  // namespace

TEST(Eigenvalues, SineAndCosineFamilies) {
    EXPECT_DOUBLE_EQ(eigenvalue(1, 1.0, BoundaryKind::Dirichlet), pi);
    EXPECT_DOUBLE_EQ(eigenvalue(3, 2.0, BoundaryKind::Dirichlet), 1.5 * pi);
    EXPECT_DOUBLE_EQ(eigenvalue(1, 1.0, BoundaryKind::Neumann), 0.5 * pi);
    EXPECT_THROW(eigenvalue(0, 1.0, BoundaryKind::Dirichlet), ValidationError);

    const auto spec = registry::preset("benchmark-sine").spec;
    const auto cos_modes = mode_eigenvalues(3, ControlKind::DirichletControl, spec);
    EXPECT_DOUBLE_EQ(cos_modes[2], 2.5 * pi);
}

TEST(DesignMatrix, EntriesAndShape) {
    const auto spec = registry::preset("benchmark-sine").spec;
    const Grid g(spec, 10, 10);
    const auto q = assemble_design_matrix(g, 4, ControlKind::NeumannControl, spec);
    ASSERT_EQ(q.rows(), 10u);
    ASSERT_EQ(q.modes(), 4u);
    const double lam = 2.0 * pi;
    EXPECT_DOUBLE_EQ(q.entries(2, 1), std::numbers::sqrt2 * (1.0 - std::cos(lam * 0.3)) / lam);

    const auto qd = assemble_design_matrix(g, 4, ControlKind::DirichletControl, spec);
    const double mu = 1.5 * pi;
    EXPECT_DOUBLE_EQ(qd.entries(4, 1), std::numbers::sqrt2 * (1.0 - std::cos(mu * 0.5)) / (mu * mu));
    EXPECT_THROW(assemble_design_matrix(g, 0, ControlKind::NeumannControl, spec), ValidationError);
}

TEST(DesignMatrix, Warnings) {
    const auto spec = registry::preset("linear-flux").spec;
    const Grid g(spec, 5, 5);
    std::vector<std::string> w;
    assemble_design_matrix(g, 8, ControlKind::DirichletControl, spec,
                           [&](const std::string& s) { w.push_back(s); });
    EXPECT_EQ(w.size(), 2u);
}

TEST(ConditionNumber, DiagonalAndSingular) {
    DenseMatrix a(3, 2);
    a(0, 0) = 3.0;
    a(1, 1) = 1.0;
    EXPECT_DOUBLE_EQ(condition_number(a), 3.0);
    EXPECT_DOUBLE_EQ(normal_condition_number(a), 9.0);
    DenseMatrix s(3, 2);
    s(0, 0) = 1.0;
    EXPECT_TRUE(std::isinf(condition_number(s)));
    EXPECT_THROW(condition_number(DenseMatrix(2, 2)), ValidationError);
}

TEST(Penalty, Operators) {
    EXPECT_EQ(penalty_operator(RegularizationOrder::Zeroth, 3).rows(), 3u);
    const auto r1 = penalty_operator(RegularizationOrder::First, 4);
    EXPECT_EQ(r1.rows(), 3u);
    EXPECT_EQ(multiply(r1, Vector{1.0, 2.0, 4.0, 7.0}), (Vector{1.0, 2.0, 3.0}));
    const auto r2 = penalty_operator(RegularizationOrder::Second, 4);
    EXPECT_EQ(multiply(r2, Vector{1.0, 2.0, 4.0, 7.0}), (Vector{1.0, 1.0}));
}

TEST(Tikhonov, RecoversExactCoefficientsWithoutRegularization) {
    const auto q = random_matrix(20, 6, 5);
    const Vector b = {1.0, -2.0, 0.5, 3.0, 0.0, 1.5};
    const auto d = multiply(q, b);
    const auto sol = tikhonov_solve(q, d, {0.0});
    for (std::size_t k = 0; k < b.size(); ++k) EXPECT_NEAR(sol.b[k], b[k], 1e-12);
    EXPECT_LT(sol.residual_norm, 1e-12);
}

TEST(Tikhonov, ZeroDataGivesZeroSolution) {
    const auto q = random_matrix(10, 4, 2);
    for (double lam : {0.0, 0.1, 10.0}) {
        const auto sol = tikhonov_solve(q, Vector(10, 0.0), {lam});
        for (double e : sol.b) EXPECT_EQ(e, 0.0);
    }
}

TEST(Tikhonov, GradientVanishesAtSolution) {
    const auto q = random_matrix(25, 8, 11);
    std::mt19937 gen(3);
    std::normal_distribution<double> nd;
    Vector d(25);
    for (double& e : d) e = nd(gen);
    for (auto order : {RegularizationOrder::Zeroth, RegularizationOrder::First, RegularizationOrder::Second}) {
        for (double lam : {1e-4, 1e-1, 10.0}) {
            const auto sol = tikhonov_solve(q, d, {lam, order});
            const auto r = penalty_operator(order, 8);
            const auto grad_res = multiply_transposed(q, subtract(multiply(q, sol.b), d));
            const auto rtr_b = multiply_transposed(r, multiply(r, sol.b));
            Vector grad(8);
            for (std::size_t i = 0; i < 8; ++i) grad[i] = grad_res[i] + lam * rtr_b[i];
            const double scale = norm2(multiply_transposed(q, d));
            EXPECT_LE(norm2(grad), 1e-8 * scale) << "lambda " << lam;

            // any perturbation raises the objective
            const double f0 = objective(q, d, r, lam, sol.b);
            for (std::size_t i = 0; i < 8; ++i) {
                auto bp = sol.b;
                bp[i] += 1e-3;
                EXPECT_GT(objective(q, d, r, lam, bp), f0);
            }
        }
    }
}

TEST(Tikhonov, NormsAreMonotoneInLambda) {
    const auto spec = registry::preset("benchmark-sine").spec;
    const Grid g(spec, 80, 80);
    const auto q = assemble_design_matrix(g, 20, ControlKind::NeumannControl, spec);
    Vector d(80);
    for (int n = 0; n < 80; ++n) d[n] = std::sin(0.37 * n) + 0.1 * n;
    double last_res = -1.0, last_sol = INFINITY;
    for (double lam : default_lambda_grid(30, 1e-8, 1e2)) {
        const auto sol = tikhonov_solve(q, d, {lam});
        EXPECT_GE(sol.residual_norm, last_res * (1.0 - 1e-12));
        EXPECT_LE(sol.solution_norm, last_sol * (1.0 + 1e-12));
        last_res = sol.residual_norm;
        last_sol = sol.solution_norm;
    }
}

TEST(Tikhonov, Errors) {
    const auto q = random_matrix(4, 6, 1);  // rank 4 < 6 columns
    EXPECT_THROW(tikhonov_solve(q, Vector(4, 1.0), {0.0}), NotPositiveDefiniteError);
    EXPECT_NO_THROW(tikhonov_solve(q, Vector(4, 1.0), {1e-3}));
    EXPECT_THROW(tikhonov_solve(q, Vector(3, 1.0), {1.0}), DimensionError);
    EXPECT_THROW(tikhonov_solve(q, Vector(4, 1.0), {-1.0}), ValidationError);
    try {
        tikhonov_solve(q, Vector(4, 1.0), {0.0});
    } catch (const NotPositiveDefiniteError& e) {
        EXPECT_NE(std::string(e.what()).find("positive regularization"), std::string::npos);
    }
}

TEST(AnalyticCoefficients, MatchQuadrature) {
    const auto sine = analytic_coefficients(ControlKind::NeumannControl, 12);
    const auto cosine = analytic_coefficients(ControlKind::DirichletControl, 12);
    for (int k = 1; k <= 12; ++k) {
        const double ls = k * pi, lc = (k - 0.5) * pi;
        EXPECT_NEAR(sine[k - 1], projected([ls](double x) { return std::sin(ls * x); }), 1e-10) << k;
        EXPECT_NEAR(cosine[k - 1], projected([lc](double x) { return std::cos(lc * x); }), 1e-10) << k;
    }
    for (int k = 2; k <= 12; k += 2) EXPECT_EQ(sine[k - 1], 0.0);
}

TEST(Reconstruction, SeriesConvergesToForce) {
    const auto spec = registry::preset("benchmark-sine").spec;
    const auto lam = mode_eigenvalues(400, ControlKind::NeumannControl, spec);
    const auto b = analytic_coefficients(ControlKind::NeumannControl, 400);
    const Vector xs = {0.2, 0.5, 0.9};
    const auto f = reconstruct_force(b, lam, ControlKind::NeumannControl, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_NEAR(f[i], benchmark_force(xs[i]), 1e-2);

    const auto lc = mode_eigenvalues(400, ControlKind::DirichletControl, spec);
    const auto bc = analytic_coefficients(ControlKind::DirichletControl, 400);
    const auto fc = reconstruct_force(bc, lc, ControlKind::DirichletControl, Vector{0.3, 0.5, 1.0});
    EXPECT_NEAR(fc[0], benchmark_force(0.3), 1e-2);
    EXPECT_NEAR(fc[1], benchmark_force(0.5), 1e-2);
    // every cosine mode vanishes at x = 1
    EXPECT_NEAR(fc[2], 0.0, 1e-12);
    EXPECT_THROW(reconstruct_force(Vector{1.0}, lam, ControlKind::NeumannControl, xs), DimensionError);
}

TEST(Reconstruction, WSolvesForcedWaveEquation) {
    const Vector b = {1.0, -0.5, 0.25};
    const double c = 1.3;
    for (auto control : {ControlKind::NeumannControl, ControlKind::DirichletControl}) {
        const Vector lam = control == ControlKind::NeumannControl ? Vector{pi, 2 * pi, 3 * pi}
                                                                  : Vector{0.5 * pi, 1.5 * pi, 2.5 * pi};
        const double x = 0.37, t = 0.61, h = 1e-3;
        auto w = [&](double xx, double tt) {
            return reconstruct_w(b, lam, control, c, {xx}, {tt}).values[0];
        };
        const double wtt = (w(x, t + h) - 2 * w(x, t) + w(x, t - h)) / (h * h);
        const double wxx = (w(x + h, t) - 2 * w(x, t) + w(x - h, t)) / (h * h);
        const double f = reconstruct_force(b, lam, control, Vector{x})[0];
        EXPECT_NEAR(wtt - c * c * wxx, f, 1e-4);
        EXPECT_EQ(w(x, 0.0), 0.0);

        const double dx = reconstruct_w_dx(b, lam, control, c, {x}, {t}).values[0];
        EXPECT_NEAR(dx, (w(x + h, t) - w(x - h, t)) / (2 * h), 1e-5);
    }
}

TEST(InverseData, DifferenceOfMeasurementAndTrace) {
    const auto spec = registry::preset("benchmark-sine").spec;
    const Grid g(spec, 4, 4);
    bem::BoundaryTraces tr(g);
    tr.dv0 = {1.0, 2.0, 3.0, 4.0};
    tr.v0 = {0.5, 0.5, 0.5, 0.5};
    const auto g1 = inverse_data(ControlKind::NeumannControl, tr, spec, g);
    EXPECT_DOUBLE_EQ(g1[0], pi - 1.0);
    const auto g2 = inverse_data(ControlKind::DirichletControl, tr, spec, g);
    EXPECT_DOUBLE_EQ(g2[1], 0.5 + 0.125 - 0.5);
    EXPECT_THROW(inverse_data(ControlKind::NeumannControl, tr, Vector{1.0}), DimensionError);

    auto no_flux = spec;
    no_flux.measured_flux.reset();
    EXPECT_THROW(measurement(ControlKind::NeumannControl, no_flux, g), ValidationError);
}

TEST(LCurve, CircleCurvature) {
    EXPECT_NEAR(circle_curvature(1, 0, 0, 1, -1, 0), 1.0, 1e-15);
    EXPECT_NEAR(circle_curvature(-1, 0, 0, 1, 1, 0), -1.0, 1e-15);
    EXPECT_EQ(circle_curvature(0, 0, 1, 1, 2, 2), 0.0);
}

TEST(LCurve, SinglePointIsDegenerateCorner) {
    const auto q = random_matrix(10, 3, 4);
    const auto lc = lcurve(q, Vector(10, 1.0), Vector{0.1});
    EXPECT_EQ(lc.corner, 0u);
    EXPECT_EQ(lc.corner_lambda(), 0.1);
    ASSERT_EQ(lc.warnings.size(), 1u);
}

TEST(LCurve, RejectsBadGrids) {
    const auto q = random_matrix(10, 3, 4);
    const Vector d(10, 1.0);
    EXPECT_THROW(lcurve(q, d, Vector{}), ValidationError);
    EXPECT_THROW(lcurve(q, d, Vector{0.0, 1.0}), ValidationError);
    EXPECT_THROW(lcurve(q, d, Vector{1.0, 0.1}), ValidationError);
    EXPECT_THROW(lcurve(q, d, Vector{0.1, 0.1, 1.0}), ValidationError);
}

TEST(LCurve, MonotoneNormsAndInteriorCorner) {
    const auto spec = registry::preset("benchmark-sine").spec;
    const Grid g(spec, 80, 80);
    const auto q = assemble_design_matrix(g, 20, ControlKind::NeumannControl, spec);
    Vector d(80);
    for (int n = 0; n < 80; ++n) d[n] = std::cos(0.2 * n) + 0.05 * std::sin(3.1 * n);
    for (auto axes : {CurveAxes::Linear, CurveAxes::Log}) {
        const auto lc = lcurve(q.entries, d, default_lambda_grid(), RegularizationOrder::Zeroth, axes);
        for (std::size_t i = 1; i < lc.points.size(); ++i) {
            EXPECT_GE(lc.points[i].residual_norm, lc.points[i - 1].residual_norm * (1 - 1e-12));
            EXPECT_LE(lc.points[i].solution_norm, lc.points[i - 1].solution_norm * (1 + 1e-12));
        }
        EXPECT_GT(lc.corner, 0u);
        EXPECT_LT(lc.corner, lc.points.size() - 1);
        EXPECT_EQ(lc.points.front().curvature, 0.0);
    }
}

TEST(LambdaGrids, Shapes) {
    const auto g = default_lambda_grid();
    ASSERT_EQ(g.size(), 40u);
    EXPECT_NEAR(g.front(), 1e-6, 1e-20);
    EXPECT_NEAR(g.back(), 10.0, 1e-12);
    EXPECT_EQ(default_lambda_grid(1, 0.5, 2.0), Vector{0.5});
    const auto c = coarse_lambda_samples();
    EXPECT_TRUE(std::is_sorted(c.begin(), c.end()));
    EXPECT_EQ(c.front(), 1e-3);
    EXPECT_EQ(c.back(), 1.0);
}
