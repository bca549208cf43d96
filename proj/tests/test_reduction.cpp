#include "support.hpp"

#include "thinlim/reduction.hpp"

#include <doctest.h>

#include <cmath>

using namespace thinlim;
using testutil::fromIni;
using testutil::stripIni;

namespace {

Vec x1(double v) { return (Vec(1) << v).finished(); }

/// Smoke problem with every term of the reduced coefficients active and
/// analytic derivatives registered for gamma0, beta0 and g+-.
const char* kSmoke = R"(
[problem]
dimension = 1
epsilon0 = 0.4
[geometry]
lower = 0
upper = 1
g_minus = -1 + 0.2*x1
g_minus.dx1 = 0.2
g_plus = 1 + 0.3*x1^2
g_plus.dx1 = 0.6*x1
[controls]
lambda = a b
mu = p q
[coefficients.a.p]
sigma_1_1 = 1 + 0.2*x1
sigma_1_2 = 0.3
sigma_2_2 = 1
b_1 = x1
b_2 = 0.5 - y
c = 1
f = sin(x1)
[coefficients.a.q]
sigma_1_1 = 0.7
sigma_2_1 = 0.4*x1
sigma_2_2 = 1.2
b_2 = -1
f = x1^2
[coefficients.b.p]
sigma_1_1 = 2
sigma_2_2 = 0.5 + y^2
c = x1
[coefficients.b.q]
sigma_1_2 = 1
sigma_2_1 = 1
b_1 = -0.5
b_2 = cos(x1)
c = 0.2
f = 1
[boundary]
gamma0_1 = 0.3*x1 - 0.1
gamma0_1.dx1 = 0.3
beta0 = x1^2 - x1
beta0.dx1 = 2*x1 - 1
kplus_1 = 0.5
kminus_1 = x1
lplus = 1 + x1
lminus = -2
beta = x1
s = x1
)";

double fd(const std::function<double(double)>& f, double x) {
    const double h = 1e-6;
    return (f(x + h) - f(x - h)) / (2 * h);
}

/// Reduced coefficients for N = 1 written out by hand.
LimitCoefficients handReduced(const ThinProblem& p, int l, int m, double x) {
    const Vec z = (Vec(2) << x, 0.0).finished();
    const Mat a = p.diffusion(l, m, z);
    const Vec b = p.drift(l, m, z);
    auto gam = [&](double t) { return p.boundary().gamma0[0](Vec((Vec(2) << t, 0).finished())); };
    auto beta0 = [&](double t) { return p.boundary().beta0(Vec((Vec(2) << t, 0).finished())); };
    const double g = gam(x), dg = fd(gam, x), db = fd(beta0, x);
    const double gp = p.gPlus(x1(x)), gm = p.gMinus(x1(x));
    const double bAux = g * dg - (gp * p.kPlus(x1(x))[0] + gm * p.kMinus(x1(x))[0]) / (gp - gm);
    const double cAux = -g * db + (gp * p.lPlus(x1(x)) + gm * p.lMinus(x1(x))) / (gp - gm);
    LimitCoefficients c;
    c.A = Mat::Constant(1, 1, a(0, 0) - 2 * g * a(0, 1) + g * g * a(1, 1));
    c.b = Vec::Constant(1, b[0] - g * b[1] - 2 * a(1, 0) * dg + a(1, 1) * bAux);
    c.c = p.reaction(l, m, z);
    c.f = p.source(l, m, z) + b[1] * beta0(x) + 2 * a(0, 1) * db + a(1, 1) * cAux;
    return c;
}

}  // namespace

TEST_CASE("auxiliary fields") {
    {
        const ThinProblem p = fromIni(stripIni("sigma_1_1 = 1"));
        CHECK(auxDrift(p, x1(0.3))[0] == 0.0);
        CHECK(auxSource(p, x1(0.3)) == 0.0);
    }
    {
        const ThinProblem p = fromIni(stripIni("sigma_1_1 = 1", "s = x1\ngamma0_1 = x1\nbeta0 = x1"));
        for (double x : {0.1, 0.5, 0.9}) {
            CHECK(auxSource(p, x1(x)) == doctest::Approx(-x).epsilon(1e-8));
            // Finite-difference cross-check of D beta0.
            auto b = [&](double t) { return p.beta0(x1(t)); };
            CHECK(auxSource(p, x1(x)) == doctest::Approx(-x * fd(b, x)).epsilon(1e-8));
        }
    }
    {
        const ThinProblem p = fromIni(stripIni("sigma_1_1 = 1", "s = x1\nlplus = 1\nlminus = 5", "g_minus = 0\ng_plus = 1"));
        CHECK(auxSource(p, x1(0.4)) == doctest::Approx(1.0));
    }
}

TEST_CASE("degenerate thickness") {
    const ThinProblem p = fromIni(stripIni("sigma_1_1 = 1", "s = x1", "g_minus = x1\ng_plus = x1"));
    CHECK_THROWS_AS(reduce(p), DegenerateThickness);
    CHECK_THROWS_AS(auxDrift(p, x1(0.5)), DegenerateThickness);
}

TEST_CASE("reduce examples") {
    {
        const ThinProblem p = fromIni(stripIni("sigma_1_1 = 2\nsigma_1_2 = 1\nsigma_2_2 = 3\nb_1 = x1\nb_2 = 4\nc = 2\nf = x1^2"));
        const auto lc = reduce(p).coefficients(0, 0, x1(0.5));
        const Mat a = p.diffusion(0, 0, (Vec(2) << 0.5, 0).finished());
        CHECK(lc.A(0, 0) == doctest::Approx(a(0, 0)));
        CHECK(lc.b[0] == doctest::Approx(0.5));
        CHECK(lc.c == 2.0);
        CHECK(lc.f == doctest::Approx(0.25));
    }
    {
        const ThinProblem p = fromIni(stripIni("sigma_1_1 = 1\nsigma_2_2 = 1", "s = x1\ngamma0_1 = 1"));
        CHECK(reduce(p).coefficients(0, 0, x1(0.3)).A(0, 0) == doctest::Approx(2.0));
    }
    {
        const ThinProblem p = fromIni(stripIni("sigma_1_1 = 1\nsigma_2_2 = 1", "s = x1\ngamma0_1 = x1"));
        const LimitProblem lp = reduce(p);
        for (double x : {0.0, 0.25, 0.7, 1.0}) {
            // -2 (row 2 of I)(Dgamma0, 0)^T vanishes; bAux = gamma0 Dgamma0.
            auto g = [&](double t) { return p.gamma0(x1(t))[0]; };
            CHECK(lp.coefficients(0, 0, x1(x)).b[0] == doctest::Approx(g(x) * fd(g, x)).epsilon(1e-8));
        }
    }
}

TEST_CASE("reduced coefficients against a hand expansion") {
    const ThinProblem p = fromIni(kSmoke);
    const LimitProblem lp = reduce(p);
    testutil::Rng rng(21);
    for (int t = 0; t < 100; ++t) {
        const double x = rng.uniform(0, 1);
        for (int l = 0; l < 2; ++l)
            for (int m = 0; m < 2; ++m) {
                const auto got = lp.coefficients(l, m, x1(x));
                const auto want = handReduced(p, l, m, x);
                CHECK(got.A(0, 0) == doctest::Approx(want.A(0, 0)).epsilon(1e-12));
                CHECK(got.b[0] == doctest::Approx(want.b[0]).epsilon(1e-8));
                CHECK(got.c == want.c);
                CHECK(got.f == doctest::Approx(want.f).epsilon(1e-8));
            }
    }
}

TEST_CASE("limit operator examples") {
    const auto single = [](double a, double c, double f) {
        return LimitProblem(1, Box{Vec::Zero(1), Vec::Ones(1)}, 1, 1,
                            [=](int, int, const Vec&) {
                                LimitCoefficients k;
                                k.A = Mat::Constant(1, 1, a);
                                k.b = Vec::Zero(1);
                                k.c = c;
                                k.f = f;
                                k.sigma = Mat::Constant(1, 1, std::sqrt(a));
                                return k;
                            },
                            [](const Vec&) { return 0.0; });
    };
    CHECK(evalOperatorG(single(1, 0, 0), Mat::Constant(1, 1, 2), Vec::Zero(1), 0, x1(0.5)).value == doctest::Approx(-2));
    CHECK(evalOperatorG(single(0, 1, 0), Mat::Zero(1, 1), Vec::Zero(1), -3, x1(0.5)).value == doctest::Approx(-3));
    const LimitProblem two(1, Box{Vec::Zero(1), Vec::Ones(1)}, 1, 2,
                           [](int, int m, const Vec&) {
                               LimitCoefficients k;
                               k.A = Mat::Zero(1, 1);
                               k.b = Vec::Zero(1);
                               k.f = m == 0 ? 2.0 : 4.0;
                               k.sigma = Mat::Zero(1, 1);
                               return k;
                           },
                           [](const Vec&) { return 0.0; });
    const auto r = evalOperatorG(two, Mat::Zero(1, 1), Vec::Zero(1), 0, x1(0.5));
    CHECK(r.value == doctest::Approx(-2));
    CHECK(r.mu == 0);
}

TEST_CASE("representation identity") {
    {
        const ThinProblem p = fromIni(stripIni("sigma_1_1 = 1 + x1\nsigma_2_2 = 1\nb_1 = 1\nc = 1\nf = x1"));
        CHECK(representationCheck(p, reduce(p), 500).maxDiscrepancy <= 1e-9);
    }
    {
        const ThinProblem p = fromIni(kSmoke);
        const auto r = representationCheck(p, reduce(p), 1000, 3);
        CHECK(r.samples == 1000);
        CHECK(r.maxDiscrepancy <= 1e-8);
    }
    {
        // Same data without registered derivatives: finite differences throughout.
        std::string text = kSmoke;
        for (const char* key : {"gamma0_1.dx1 = 0.3\n", "beta0.dx1 = 2*x1 - 1\n", "g_minus.dx1 = 0.2\n", "g_plus.dx1 = 0.6*x1\n"})
            text.erase(text.find(key), std::string(key).size());
        const ThinProblem p = fromIni(text);
        CHECK(representationCheck(p, reduce(p), 1000, 3).maxDiscrepancy <= 1e-4);
    }
}

TEST_CASE("representation identity against a hand-built bordered matrix") {
    const ThinProblem p = fromIni(kSmoke);
    const LimitProblem lp = reduce(p);
    testutil::Rng rng(13);
    for (int t = 0; t < 200; ++t) {
        const double x = rng.uniform(0, 1), X = rng.uniform(-1, 1), q = rng.uniform(-1, 1), r = rng.uniform(-1, 1);
        auto gam = [&](double s) { return p.gamma0(x1(s))[0]; };
        auto b0 = [&](double s) { return p.beta0(x1(s)); };
        const double g = gam(x), dg = fd(gam, x), db = fd(b0, x);
        const double gp = p.gPlus(x1(x)), gm = p.gMinus(x1(x));
        const double bAux = g * dg - (gp * p.kPlus(x1(x))[0] + gm * p.kMinus(x1(x))[0]) / (gp - gm);
        const double cAux = -g * db + (gp * p.lPlus(x1(x)) + gm * p.lMinus(x1(x))) / (gp - gm);
        Mat big(2, 2);
        big << X, -g * X - q * dg + db, -g * X - q * dg + db, g * g * X + bAux * q + cAux;
        const Vec grad = (Vec(2) << q, b0(x) - g * q).finished();
        const double rhs = evalOperatorF(p, big, grad, r, (Vec(2) << x, 0).finished()).value;
        const double lhs = evalOperatorG(lp, Mat::Constant(1, 1, X), Vec::Constant(1, q), r, x1(x)).value;
        CHECK(std::abs(lhs - rhs) <= 1e-7);
    }
}

TEST_CASE("property: sub-additivity") {
    const ThinProblem p = fromIni(kSmoke);
    const LimitProblem lp = reduce(p);
    CHECK(subadditivityCheck(lp, 500, 4).maxExcess <= 1e-12);
    testutil::Rng rng(14);
    for (int t = 0; t < 200; ++t) {
        const Vec x = x1(rng.uniform(0, 1));
        const Mat X1 = rng.sym(1), X2 = rng.sym(1);
        const Vec p1 = rng.vec(1), p2 = rng.vec(1);
        const double r1 = rng.uniform(-1, 1), r2 = rng.uniform(-1, 1);
        double sup = -1e300;
        for (int l = 0; l < 2; ++l)
            for (int m = 0; m < 2; ++m)
                sup = std::max(sup, evalHomogeneous(lp.coefficients(l, m, x), X1 - X2, p1 - p2, r1 - r2));
        const double lhs = evalOperatorG(lp, X1, p1, r1, x).value - evalOperatorG(lp, X2, p2, r2, x).value;
        CHECK(lhs <= sup + 1e-12);
    }
}

TEST_CASE("property: reduced diffusion structure") {
    const ThinProblem p = fromIni(kSmoke);
    const LimitProblem lp = reduce(p);
    testutil::Rng rng(15);
    for (int t = 0; t < 200; ++t) {
        const Vec x = x1(rng.uniform(0, 1));
        for (int l = 0; l < 2; ++l)
            for (int m = 0; m < 2; ++m) {
                const auto c = lp.coefficients(l, m, x);
                CHECK((c.A - c.sigma.transpose() * c.sigma).cwiseAbs().maxCoeff() <= 1e-10);
                CHECK(c.A(0, 0) >= -1e-12);
                CHECK(c.c >= 0.0);
                CHECK(c.c == p.reaction(l, m, lift(x, 0.0)));
            }
        const Mat X = rng.sym(1);
        const Vec q = rng.vec(1);
        double r1 = rng.uniform(-1, 1), r2 = rng.uniform(-1, 1);
        if (r1 > r2) std::swap(r1, r2);
        CHECK(evalOperatorG(lp, X, q, r1, x).value <= evalOperatorG(lp, X, q, r2, x).value + 1e-14);
        CHECK(evalOperatorG(lp, X, q, 0.1, x).value >=
              evalOperatorG(lp, X + Mat::Constant(1, 1, rng.uniform(0, 1)), q, 0.1, x).value - 1e-14);
    }
}

TEST_CASE("bounds are reported") {
    const ThinProblem p = fromIni(kSmoke);
    const auto b = estimateBounds(reduce(p));
    CHECK(b.supBound > 0.0);
    CHECK(b.lipschitzBound > 0.0);
    CHECK(b.constant == std::max(b.supBound, b.lipschitzBound));
    CHECK(b.nodes > 0);
}

TEST_CASE("dirichlet trace") {
    const ThinProblem p = fromIni(kSmoke);
    CHECK(reduce(p).dirichlet(x1(0.3)) == doctest::Approx(0.3));
}
