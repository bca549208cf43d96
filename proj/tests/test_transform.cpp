#include "support.hpp"

#include "thinlim/transform.hpp"

#include <doctest.h>

#include <cmath>

using namespace thinlim;
using testutil::fromIni;
using testutil::stripIni;

namespace {

Vec v1(double a) { return (Vec(1) << a).finished(); }

DistortionMap mapOf(const std::string& gamma, double r = 0.5) {
    return DistortionMap({ScalarFunction::parse(gamma, 1)}, r);
}

double bisect(const std::function<double(double)>& f, double lo, double hi) {
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Least-squares slope of log(gap) against log(eps).
double slope(const std::vector<double>& eps, const std::vector<double>& gap) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(eps.size());
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const double x = std::log(eps[i]), y = std::log(gap[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("forward map examples") {
    CHECK(mapOf("0").forward(v1(0.3), 0.2) == (Vec(2) << 0.3, 0.2).finished());
    CHECK((mapOf("1").forward(v1(0), 0.1) - (Vec(2) << 0.1, 0.1).finished()).norm() <= 1e-15);
    CHECK(mapOf("sin(x1)").forward(v1(0.7), 0.0) == (Vec(2) << 0.7, 0.0).finished());
}

TEST_CASE("inverse map examples") {
    CHECK(mapOf("0").inverse(v1(0.3), 0.2)[0] == 0.3);
    CHECK(mapOf("1").inverse(v1(0.3), 0.2)[0] == doctest::Approx(0.1).epsilon(1e-15));
    const double z = mapOf("0.1*sin(x1)").inverse(v1(1.0), 0.1)[0];
    const double oracle = bisect([](double t) { return t + 0.01 * std::sin(t) - 1.0; }, 0.9, 1.0);
    CHECK(std::abs(z - oracle) <= 1e-13);
    CHECK(std::abs(z + 0.01 * std::sin(z) - 1.0) <= 1e-12);
}

TEST_CASE("inverse reports a broken contraction") {
    const DistortionMap m({ScalarFunction::parse("5*x1", 1)}, 0.5, 1e-14, 50);
    CHECK_THROWS_AS(m.inverse(v1(0.5), 0.5), NoConvergence);
    CHECK_THROWS_AS(DistortionMap({ScalarFunction::parse("x1", 1)}, 1.5), PreconditionViolated);
}

TEST_CASE("profile examples") {
    const auto gp = ScalarFunction::parse("1 + 0.5*x1", 1);
    CHECK(mapOf("0").profile(gp, 0.1, v1(0.4)) == doctest::Approx(0.1 * 1.2).epsilon(1e-12));
    CHECK(mapOf("0.3*x1").profile(ScalarFunction(2.0), 0.1, v1(0.4)) == doctest::Approx(0.2).epsilon(1e-12));
    const double y = mapOf("0.2").profile(gp, 0.1, v1(0.0));
    CHECK(std::abs(y - 0.1 / 0.99) <= 1e-12);
    const double oracle = bisect([](double t) { return t - 0.1 * (1 + 0.5 * 0.2 * t); }, -0.5, 0.5);
    CHECK(std::abs(y - oracle) <= 1e-12);
}

TEST_CASE("matrix R examples") {
    const Mat r0 = mapOf("0.3*x1 + 0.2").matrixR(v1(0.5), 0.0);
    CHECK((r0 - (Mat(2, 2) << 1, -0.35, 0, 1).finished()).norm() <= 1e-12);
    CHECK((mapOf("0").matrixR(v1(0.5), 0.3) - Mat::Identity(2, 2)).norm() == 0.0);
    CHECK((mapOf("1").matrixR(v1(0.2), 0.5) - (Mat(2, 2) << 1, -1, 0, 1).finished()).norm() <= 1e-12);
    // DP R = I at general points.
    const DistortionMap m = mapOf("0.3*sin(2*x1)");
    testutil::Rng rng(1);
    for (int t = 0; t < 50; ++t) {
        const double z = rng.uniform(-1, 2), y = rng.uniform(-0.5, 0.5);
        Mat dp(2, 2);
        dp << 1 + y * 0.6 * std::cos(2 * z), 0.3 * std::sin(2 * z), 0, 1;
        CHECK((dp * m.matrixR(v1(z), y) - Mat::Identity(2, 2)).norm() <= 1e-9);
        CHECK((m.jacobianQ(m.forward(v1(z), y).head(1), y) - m.matrixR(v1(z), y)).norm() <= 1e-9);
    }
    CHECK_THROWS_AS(DistortionMap({ScalarFunction::parse("-4*x1", 1)}, 0.5).matrixR(v1(0.0), 0.25), SingularJacobian);
}

TEST_CASE("pushforward examples") {
    const ThinProblem base = fromIni(stripIni("sigma_1_1 = 1 + 0.2*x1\nsigma_1_2 = 0.3\nsigma_2_2 = 1\nb_1 = x1\nb_2 = y\nc = 2\nf = x1*y"));
    {
        const HatOperator h = pushforward(base, mapOf("0"));
        const Vec z = v1(0.4);
        const auto c = h.coefficients(0, 0, z, 0.3);
        const Vec x = (Vec(2) << 0.4, 0.3).finished();
        CHECK((c.sigma - base.sigma(0, 0, x)).norm() == 0.0);
        CHECK((c.b - base.drift(0, 0, x)).norm() <= 1e-12);
        CHECK(c.c == base.reaction(0, 0, x));
        CHECK(c.f == base.source(0, 0, x));
    }
    {
        const DistortionMap m = mapOf("0.7");
        const HatOperator h = pushforward(base, m);
        CHECK(h.curvatureDrift(0, 0, v1(0.4), 0.2).norm() <= 1e-12);
        const auto c = h.coefficients(0, 0, v1(0.4), 0.2);
        const Mat r = (Mat(2, 2) << 1, -0.7, 0, 1).finished();
        const Vec x = m.forward(v1(0.4), 0.2);
        CHECK((c.sigma - base.sigma(0, 0, x) * r.transpose()).norm() <= 1e-12);
    }
    {
        // d from finite differences of Q against the implicit formula.
        const DistortionMap m = mapOf("0.1*sin(x1)");
        testutil::Rng rng(2);
        for (int t = 0; t < 20; ++t) {
            const Vec x = v1(rng.uniform(0, 1));
            const double y = rng.uniform(-0.4, 0.4);
            const auto fdh = m.hessianQFiniteDifference(x, y);
            const auto imp = m.hessianQImplicit(x, y);
            for (int i = 0; i < 2; ++i) CHECK((fdh[i] - imp[i]).cwiseAbs().maxCoeff() <= 1e-3);
            CHECK(imp[1].norm() == 0.0);
        }
    }
}

TEST_CASE("hat boundary examples") {
    {
        const ThinProblem p = fromIni(stripIni("sigma_1_1 = 1\nsigma_2_2 = 1"));
        const HatBoundary hb = hatBoundary(p, mapOf("0"));
        for (double y : {-0.3, 0.0, 0.4}) {
            CHECK((hb.gammaPlus(v1(0.2), y) - (Vec(2) << 0, 1).finished()).norm() == 0.0);
            CHECK((hb.gammaMinus(v1(0.2), y) - (Vec(2) << 0, -1).finished()).norm() == 0.0);
        }
    }
    const ThinProblem p = fromIni(stripIni("sigma_1_1 = 1\nsigma_2_2 = 1",
                                           "s = x1\ngamma0_1 = 0.2*x1 + 0.1*x1^2\nkplus_1 = 0.5\nkminus_1 = x1\n"
                                           "beta0 = cos(x1)\nlplus = 1\nlminus = 2"));
    const DistortionMap m = DistortionMap::fromProblem(p);
    const HatBoundary hb = hatBoundary(p, m);
    for (double z : {0.0, 0.3, 0.8, 1.1}) {
        CHECK(std::abs(hb.gammaPlus(v1(z), 0.0)[0]) <= 1e-14);
        CHECK(std::abs(hb.gammaMinus(v1(z), 0.0)[0]) <= 1e-14);
        CHECK(hb.betaPlus(v1(z), 0.0) == doctest::Approx(std::cos(z)));
        CHECK(hb.betaMinus(v1(z), 0.0) == doctest::Approx(-std::cos(z)));
        for (double y : {-0.2, 0.1}) {
            CHECK(std::abs(hb.gammaPlus(v1(z), y)[1] - 1.0) <= 1e-14);
            CHECK(std::abs(hb.gammaMinus(v1(z), y)[1] + 1.0) <= 1e-14);
        }
    }
    CHECK(checkHatBoundary(p, m).passed);
}

TEST_CASE("transplanted ellipticity") {
    const std::vector<Vec> nodes = boxLattice(Box{Vec::Zero(1), Vec::Ones(1)}, 33);
    {
        const ThinProblem p = fromIni(stripIni("sigma_1_1 = 1 + x1\nsigma_2_2 = 1"));
        const auto tr = transplantEllipticity(p, mapOf("0"), nodes);
        CHECK(tr.certificate.margin == doctest::Approx(interiorCertificate(p, nodes).margin).epsilon(1e-14));
    }
    {
        const ThinProblem p = fromIni(stripIni("sigma_1_1 = 1\nsigma_2_2 = 1", "s = x1\ngamma0_1 = 1"));
        const auto tr = transplantEllipticity(p, DistortionMap::fromProblem(p), nodes);
        CHECK(tr.certificate.margin == doctest::Approx(2.0));
        CHECK(tr.maxDiscrepancy <= 1e-12);
    }
    {
        const ThinProblem p = fromIni(stripIni("sigma_1_1 = 1 + 0.3*x1\nsigma_1_2 = 0.4*y + 0.2\nsigma_2_1 = 0.1\nsigma_2_2 = 2",
                                               "s = x1^2 + x1\ngamma0_1 = 0.3*sin(3*x1)"));
        CHECK(transplantEllipticity(p, DistortionMap::fromProblem(p), nodes).maxDiscrepancy <= 1e-9);
    }
}

TEST_CASE("radius selection") {
    const ThinProblem flat = fromIni(stripIni("sigma_1_1 = 1"));
    CHECK(DistortionMap::selectRadius(flat) == 0.5);
    const ThinProblem steep = fromIni(stripIni("sigma_1_1 = 1", "s = x1\ngamma0_1 = 3*x1"));
    const double r = DistortionMap::selectRadius(steep);
    CHECK(r * 3.0 <= 0.5);
    CHECK(r * 2 * 3.0 > 0.5);
}

TEST_CASE("property: P and Q are mutually inverse on the strip") {
    for (const char* g : {"0.2*x1", "0.1*sin(x1)", "0.4*cos(3*x1) - 0.2"}) {
        const DistortionMap m = mapOf(g, 0.25);
        double worst = 0.0;
        for (const Vec& w : boxLattice(Box{(Vec(2) << 0, -0.25).finished(), (Vec(2) << 1, 0.25).finished()}, 41)) {
            const Vec x = w.head(1);
            const double y = w[1];
            worst = std::max(worst, (m.forward(m.inverse(x, y), y).head(1) - x).cwiseAbs().maxCoeff());
            worst = std::max(worst, (m.inverse(m.forward(x, y).head(1), y) - x).cwiseAbs().maxCoeff());
        }
        CHECK_MESSAGE(worst <= 1e-10, g);
    }
}

TEST_CASE("property: Q moves points by at most r sup|gamma|") {
    const DistortionMap m = mapOf("0.4*cos(3*x1) - 0.2", 0.25);
    const Box region{Vec::Constant(1, -0.2), Vec::Constant(1, 1.2)};
    const double sup = m.gammaSup(region.inflated(0.5), 2001);
    testutil::Rng rng(3);
    for (int t = 0; t < 1000; ++t) {
        const Vec x = v1(rng.uniform(0, 1));
        const double y = rng.uniform(-0.25, 0.25);
        CHECK((m.inverse(x, y) - x).norm() <= m.r() * sup + 1e-12);
    }
}

TEST_CASE("property: profile gap is quadratic in eps") {
    const DistortionMap m = mapOf("0.2*x1 + 0.1");
    const auto gp = ScalarFunction::parse("1 + 0.5*x1^2", 1);
    std::vector<double> eps{0.1, 0.05, 0.025, 0.0125}, gap;
    for (double e : eps) {
        double g = 0.0;
        for (const Vec& z : boxLattice(Box{Vec::Zero(1), Vec::Ones(1)}, 65))
            g = std::max(g, std::abs(m.profile(gp, e, z) - e * gp(lift(z, 0.0))));
        gap.push_back(g);
    }
    CHECK(slope(eps, gap) >= 1.9);
}

TEST_CASE("property: strict ordering is preserved by the profile") {
    const DistortionMap m = mapOf("0.2*x1 + 0.1");
    const auto gp = ScalarFunction::parse("1 + 0.5*x1^2", 1);
    testutil::Rng rng(4);
    for (int t = 0; t < 1000; ++t) {
        const Vec z = v1(rng.uniform(0, 1));
        const double eps = rng.uniform(0.01, 0.3), y = rng.uniform(-0.5, 0.5);
        const double prof = m.profile(gp, eps, z);
        if (std::abs(y - prof) < 1e-9) continue;
        const bool above = y > eps * gp(lift(z + y * m.gamma(z), 0.0));
        CHECK((y > prof) == above);
    }
}

TEST_CASE("property: hatted reaction and diffusion stay admissible") {
    const ThinProblem p = fromIni(stripIni("sigma_1_1 = 1 + 0.3*x1\nsigma_1_2 = 0.2\nsigma_2_2 = 1\nc = x1^2",
                                           "s = x1\ngamma0_1 = 0.3*sin(2*x1)"));
    const DistortionMap m = DistortionMap::fromProblem(p);
    const HatOperator h = pushforward(p, m);
    testutil::Rng rng(5);
    for (int t = 0; t < 300; ++t) {
        const auto c = h.coefficients(0, 0, v1(rng.uniform(0, 1)), rng.uniform(-m.r(), m.r()));
        CHECK(c.c >= 0.0);
        Eigen::SelfAdjointEigenSolver<Mat> es(c.A);
        CHECK(es.eigenvalues()[0] >= -1e-12);
        CHECK((c.A - c.sigma.transpose() * c.sigma).norm() <= 1e-12);
    }
}

TEST_CASE("hatted domain covers Q of the strip") {
    const ThinProblem p = fromIni(stripIni("sigma_1_1 = 1", "s = x1\ngamma0_1 = 0.4*x1 - 0.3"));
    const DistortionMap m = DistortionMap::fromProblem(p);
    const Box dom = m.hatDomain(p.omega());
    for (const Vec& w : boxLattice(Box{(Vec(2) << 0, -m.r()).finished(), (Vec(2) << 1, m.r()).finished()}, 33))
        CHECK(dom.contains(m.inverse(w.head(1), w[1]), 1e-12));
}
