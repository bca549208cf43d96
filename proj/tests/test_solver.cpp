#include "support.hpp"

#include "thinlim/solver.hpp"

#include <doctest.h>

#include <cmath>

using namespace thinlim;
using testutil::fromIni;
using testutil::stripIni;

namespace {

Box unitBox() { return Box{Vec::Zero(1), Vec::Ones(1)}; }

LimitCoefficients coeffs(double a, double b, double c, double f) {
    LimitCoefficients out;
    out.A = Mat::Constant(1, 1, a);
    out.b = Vec::Constant(1, b);
    out.c = c;
    out.f = f;
    out.sigma = Mat::Constant(1, 1, std::sqrt(a));
    return out;
}

LimitProblem limit1d(int nL, int nM, LimitProblem::CoefficientFn fn, LimitProblem::TraceFn trace) {
    return LimitProblem(1, unitBox(), nL, nM, std::move(fn), std::move(trace));
}

/// 2x2 game with x-dependent data; `bump` is added to every source.
LimitProblem game(double bump) {
    return limit1d(
        2, 2,
        [bump](int l, int m, const Vec& x) {
            const double a = 1 + 0.5 * l + 0.25 * m;
            const double b = (l == 0 ? 1.0 : -1.0) * (0.5 + m);
            const double f = std::sin(3 * x[0] + l) * (m + 1) + bump;
            return coeffs(a, b, 0.1 * l, f);
        },
        [](const Vec& x) { return x[0] * x[0]; });
}

double maxAbs(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST_CASE("grids") {
    const Grid lg = limitGrid(unitBox(), 5);
    CHECK(lg.size() == 5);
    CHECK(lg.kind[0] == NodeKind::Lateral);
    CHECK(lg.kind[2] == NodeKind::Interior);
    CHECK(lg.point(4)[0] == 1.0);
    const Grid eg = epsGrid(unitBox(), -0.1, 0.1, 9, 10);
    CHECK(eg.size() == 90);
    CHECK(eg.spacing[1] == doctest::Approx(0.2 / 8));
    // Outer layers sit half a cell outside the strip.
    CHECK(eg.point(eg.index({4, 0}))[1] == doctest::Approx(-0.1 - 0.2 / 16));
    CHECK(eg.point(eg.index({4, 9}))[1] == doctest::Approx(0.1 + 0.2 / 16));
    CHECK(eg.kind[eg.index({4, 0})] == NodeKind::Bottom);
    CHECK(eg.kind[eg.index({4, 9})] == NodeKind::Top);
    CHECK(eg.kind[eg.index({0, 5})] == NodeKind::Lateral);
    CHECK_FALSE(eg.insideStrip(eg.index({4, 0})));
    CHECK(eg.insideStrip(eg.index({4, 1})));
    CHECK(eg.neighbor(eg.index({0, 3}), 0, -1) == -1);
    CHECK_THROWS_AS(epsGrid(unitBox(), 0.1, 0.1, 9, 10), DegenerateThickness);
}

TEST_CASE("interior stencil reproduces quadratics") {
    const Grid g = epsGrid(unitBox(), -0.2, 0.2, 9, 12);
    Mat A(2, 2);
    A << 2, 0.3, 0.3, 1;
    const Vec b = (Vec(2) << 0.7, -0.4).finished();
    const int idx = g.index({4, 5});
    auto u = [](const Vec& z) { return z[0] * z[0] + 3 * z[0] * z[1] - z[1] * z[1] + z[0]; };
    double v = 0.0;
    for (const auto& [node, w] : interiorStencil(g, idx, A, b, 0.0)) v += w * u(g.point(node));
    const Vec z = g.point(idx);
    // Upwind first differences are exact for the linear part only.
    const double du0 = 2 * z[0] + 3 * z[1] + 1, du1 = 3 * z[0] - 2 * z[1];
    const double h0 = g.spacing[0], h1 = g.spacing[1];
    const double upwind = b[0] * (du0 + h0) + b[1] * (du1 + h1);
    CHECK(v == doctest::Approx(-(2 * 2 + 2 * 0.3 * 3 + 1 * -2) - upwind));
}

TEST_CASE("Dirichlet top and bottom reproduce a linear solution exactly") {
    const ThinProblem p = fromIni(stripIni("sigma_1_1 = 1\nsigma_2_2 = 1", "s = x1\nbeta = x1"));
    const Grid g = epsGrid(p.omega(), -0.1, 0.1, 17, 9);
    EpsOptions eo;
    eo.dirichletTopBottom = true;
    const GridField u = policyIteration(discretizeEps(p, 0.1, g, eo));
    for (int i = 0; i < g.size(); ++i) CHECK(std::abs(u.values[i] - g.point(i)[0]) <= 1e-12);
}

TEST_CASE("cross-derivative dominance is rejected") {
    const ThinProblem p = fromIni(stripIni("sigma_1_1 = 1\nsigma_1_2 = 1\nsigma_2_2 = 0.1"));
    const Grid g = epsGrid(p.omega(), -0.1, 0.1, 9, 17);
    CHECK_THROWS_AS(discretizeEps(p, 0.1, g), NonMonotoneStencil);
}

TEST_CASE("oblique rows: one-sided vertical difference plus upwinded tangential term") {
    const ThinProblem p = fromIni(stripIni("sigma_1_1 = 1\nsigma_2_2 = 1",
                                           "s = x1\ngamma_plus_1 = 0.5\ngamma_plus_2 = 2\nbeta_plus = 7\n"
                                           "gamma_minus_1 = 0\ngamma_minus_2 = -3\nbeta_minus = -2"));
    const Grid g = epsGrid(p.omega(), -0.1, 0.1, 9, 10);
    const DiscreteSystem sys = discretizeEps(p, 0.1, g);
    const double hx = g.spacing[0], hy = g.spacing[1];
    {
        const int top = g.index({4, 9}), inner = g.index({4, 8});
        const int r = sys.unknownOf[top];
        REQUIRE(r >= 0);
        const double w = 0.5 / (2 * hx);
        CHECK(sys.ops[0].coeff(r, r) == doctest::Approx(2 / hy + w));
        CHECK(sys.ops[0].coeff(r, sys.unknownOf[inner]) == doctest::Approx(-2 / hy + w));
        CHECK(sys.ops[0].coeff(r, sys.unknownOf[g.index({3, 9})]) == doctest::Approx(-w));
        CHECK(sys.ops[0].coeff(r, sys.unknownOf[g.index({3, 8})]) == doctest::Approx(-w));
        CHECK(sys.rhs[0][r] == 7.0);
        CHECK_FALSE(sys.controlled[r]);
    }
    {
        const int bot = g.index({4, 0}), inner = g.index({4, 1});
        const int r = sys.unknownOf[bot];
        CHECK(sys.ops[0].coeff(r, r) == doctest::Approx(3 / hy));
        CHECK(sys.ops[0].coeff(r, sys.unknownOf[inner]) == doctest::Approx(-3 / hy));
        CHECK(sys.rhs[0][r] == -2.0);
    }
    const ThinProblem wrong = fromIni(stripIni("sigma_1_1 = 1\nsigma_2_2 = 1", "s = x1\ngamma_plus_2 = -1"));
    CHECK_THROWS_AS(discretizeEps(wrong, 0.1, g), NonMonotoneStencil);
}

TEST_CASE("limit examples") {
    SolverSettings s;
    s.nx = 33;
    {
        const LimitProblem lp = limit1d(1, 1, [](int, int, const Vec&) { return coeffs(1, 0, 0, 0); },
                                        [](const Vec& x) { return x[0]; });
        const GridField u = solveLimit(lp, s);
        for (int i = 0; i < u.grid.size(); ++i) CHECK(std::abs(u.values[i] - u.grid.point(i)[0]) <= 1e-12);
        CHECK(u.iterations == 1);
        CHECK(u.policySwitches == 0);
    }
    {
        const LimitProblem lp = limit1d(1, 1, [](int, int, const Vec&) { return coeffs(1, 0, 1, 1); },
                                        [](const Vec&) { return 1.0; });
        const GridField u = solveLimit(lp, s);
        CHECK(maxAbs(u.values - Vec::Ones(u.values.size())) <= 1e-12);
    }
    {
        const LimitProblem lp = limit1d(1, 2, [](int, int m, const Vec&) { return coeffs(1, 0, 0, m == 0 ? 2 : 4); },
                                        [](const Vec&) { return 0.0; });
        const GridField u = solveLimit(lp, s);
        for (int i = 0; i < u.grid.size(); ++i) {
            const double x = u.grid.point(i)[0];
            CHECK(std::abs(u.values[i] - x * (1 - x)) <= 1e-12);
        }
        CHECK(u.iterations <= 2);
        for (int i = 1; i + 1 < u.grid.size(); ++i) CHECK(u.mu[i] == 0);
    }
}

TEST_CASE("a frozen system without a dominant row is singular") {
    DiscreteSystem sys;
    sys.grid = limitGrid(unitBox(), 3);
    sys.grid.kind.assign(3, NodeKind::Interior);
    sys.unknownOf = {0, 1, -1};
    sys.nodeOf = {0, 1};
    sys.fixed = Vec::Zero(3);
    sys.controlled = {0, 0};
    Eigen::SparseMatrix<double, Eigen::RowMajor> m(2, 2);
    m.insert(0, 0) = 1;
    m.insert(0, 1) = -1;
    m.insert(1, 0) = -1;
    m.insert(1, 1) = 1;
    m.makeCompressed();
    CHECK(unchainedRows(m) == std::vector<int>{0, 1});
    sys.ops.push_back(m);
    sys.rhs.push_back(Vec::Zero(2));
    CHECK_THROWS_AS(policyIteration(sys), SingularSystem);
}

TEST_CASE("unchained rows") {
    Eigen::SparseMatrix<double, Eigen::RowMajor> m(3, 3);
    m.insert(0, 0) = 2;
    m.insert(0, 1) = -1;
    m.insert(1, 0) = -1;
    m.insert(1, 1) = 1;
    m.insert(2, 1) = -0.5;
    m.insert(2, 2) = 1;
    m.makeCompressed();
    CHECK(unchainedRows(m).empty());
}

TEST_CASE("property: raising the source never lowers the solution") {
    SolverSettings s;
    s.nx = 33;
    const GridField base = solveLimit(game(0.0), s);
    testutil::Rng rng(11);
    for (int t = 0; t < 5; ++t) {
        const double bump = rng.uniform(0.0, 2.0);
        const GridField up = solveLimit(game(bump), s);
        for (int i = 0; i < base.grid.size(); ++i) CHECK(up.values[i] >= base.values[i] - 1e-12);
    }
}

TEST_CASE("property: the residual history is non-increasing") {
    SolverSettings s;
    s.nx = 65;
    for (double bump : {0.0, 1.0, -3.0}) {
        const GridField u = solveLimit(game(bump), s);
        CHECK(u.scaledResidual <= 1e-10);
        for (std::size_t k = 1; k < u.residualHistory.size(); ++k)
            CHECK(u.residualHistory[k] <= u.residualHistory[k - 1] * (1 + 1e-12) + 1e-14);
    }
}

TEST_CASE("boundary data is attained exactly") {
    const ThinProblem p = testutil::loadNamed("reference").problem;
    SolverSettings s;
    s.nx = 33;
    const LimitProblem lp = reduce(p);
    const GridField u0 = solveLimit(lp, s);
    for (int i = 0; i < u0.grid.size(); ++i)
        if (u0.grid.kind[i] != NodeKind::Interior) CHECK(u0.values[i] == lp.dirichlet(u0.grid.point(i)));
    const GridField ue = solveEps(p, 0.1, s);
    for (int i = 0; i < ue.grid.size(); ++i)
        if (ue.grid.kind[i] == NodeKind::Lateral) CHECK(ue.values[i] == p.betaLateral(ue.grid.point(i)));
}

TEST_CASE("comparison perturbation on the reference limit") {
    const ThinProblem p = testutil::loadNamed("reference").problem;
    const auto s = [&p](const Vec& x) { return Jet{p.s(x), p.sGradient(x), p.sHessian(x)}; };
    const PerturbationReport r = comparisonPerturbation(reduce(p), s, 65);
    CHECK(r.passed);
    CHECK(r.maxG0 <= -0.5);
    CHECK(r.nodes == 63);
    const LimitProblem flat = limit1d(1, 1, [](int, int, const Vec&) { return coeffs(0, 0, 0, 0); },
                                      [](const Vec&) { return 0.0; });
    CHECK_THROWS_AS(comparisonPerturbation(flat, s, 17), SearchExhausted);
}

TEST_CASE("reference systems converge quickly") {
    for (const char* name : {"reference", "reference_c1"}) {
        const ProblemConfig cfg = testutil::loadNamed(name);
        const GridField u0 = solveLimit(reduce(cfg.problem), cfg.solver);
        CHECK(u0.scaledResidual <= 1e-10);
        CHECK(u0.iterations <= 10);
        const GridField ue = solveEps(cfg.problem, 0.1, cfg.solver);
        CHECK(ue.scaledResidual <= 1e-10);
        CHECK(ue.iterations <= 10);
    }
}

TEST_CASE("Gauss-Seidel agrees with the direct solve") {
    SolverSettings s;
    s.nx = 17;
    const GridField a = solveLimit(game(0.3), s);
    s.gaussSeidel = true;
    const GridField b = solveLimit(game(0.3), s);
    CHECK(maxAbs(a.values - b.values) <= 1e-9);
}

TEST_CASE("threaded assembly is deterministic") {
    const ThinProblem p = testutil::loadNamed("reference_c1").problem;
    SolverSettings s;
    s.nx = 33;
    const GridField a = solveEps(p, 0.05, s, 1);
    const GridField b = solveEps(p, 0.05, s, 4);
    CHECK(a.values == b.values);
    CHECK(a.iterations == b.iterations);
}

TEST_CASE("interpolation is exact on linear fields") {
    SolverSettings s;
    s.nx = 9;
    const LimitProblem lp = limit1d(1, 1, [](int, int, const Vec&) { return coeffs(1, 0, 0, 0); },
                                    [](const Vec& x) { return 2 * x[0] - 1; });
    const GridField u = solveLimit(lp, s);
    testutil::Rng rng(12);
    for (int t = 0; t < 50; ++t) {
        const double x = rng.uniform(0, 1);
        CHECK(interpolate(u, Vec::Constant(1, x)) == doctest::Approx(2 * x - 1).epsilon(1e-12));
    }
    CHECK(interpolate(u, Vec::Constant(1, 1.0)) == doctest::Approx(1.0));
}
