#include "thinlim/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace thinlim {

LimitProblem::LimitProblem(int dim, Box domain, int nLambda, int nMu, CoefficientFn coefficients,
                           TraceFn dirichlet)
    : dim_(dim),
      domain_(std::move(domain)),
      nLambda_(nLambda),
      nMu_(nMu),
      coeff_(std::move(coefficients)),
      trace_(std::move(dirichlet)) {}

namespace {

double thickness(const ThinProblem& p, const Vec& x) {
    const double t = p.gPlus(x) - p.gMinus(x);
    if (t < 1e-12) throw DegenerateThickness("g+ - g- = " + std::to_string(t) + " at x1=" + std::to_string(x[0]));
    return t;
}

}  // namespace

Vec auxDrift(const ThinProblem& p, const Vec& x) {
    const double t = thickness(p, x);
    const Vec g0 = p.gamma0(x);
    const Mat dg = p.gamma0Jacobian(x);  // dg(j, i) = d_i gamma0_j
    return dg * g0 - (p.gPlus(x) * p.kPlus(x) + p.gMinus(x) * p.kMinus(x)) / t;
}

double auxSource(const ThinProblem& p, const Vec& x) {
    const double t = thickness(p, x);
    return -p.gamma0(x).dot(p.beta0Gradient(x)) + (p.gPlus(x) * p.lPlus(x) + p.gMinus(x) * p.lMinus(x)) / t;
}

LimitProblem reduce(const ThinProblem& p, int checkPerAxis) {
    for (const Vec& x : boxLattice(p.omega(), checkPerAxis)) thickness(p, x);
    const int n = p.dim();
    auto coeff = [p, n](int l, int m, const Vec& x) {
        const Vec z = lift(x, 0.0);
        const Vec g0 = p.gamma0(x);
        const Mat j = reductionMatrix<double>(g0);
        const Mat a = p.diffusion(l, m, z);
        const Vec b = p.drift(l, m, z);
        const Mat dg = p.gamma0Jacobian(x);
        Mat dg0 = Mat::Zero(n, n + 1);  // (Dgamma0, 0)
        dg0.leftCols(n) = dg;

        LimitCoefficients out;
        out.sigma = p.sigma(l, m, z) * j.transpose();
        out.A = j * a * j.transpose();
        out.A = (out.A + out.A.transpose()) / 2;
        const RowVec lastRow = a.row(n);
        out.b = (b.transpose() * j.transpose()).transpose() - 2.0 * (lastRow * dg0.transpose()).transpose() +
                a(n, n) * auxDrift(p, x);
        out.c = p.reaction(l, m, z);
        const Mat cm = bordered<double>(p.beta0Gradient(x), auxSource(p, x));
        out.f = p.source(l, m, z) + b[n] * p.beta0(x) + (a.cwiseProduct(cm)).sum();
        return out;
    };
    auto trace = [p](const Vec& x) { return p.betaLateral(lift(x, 0.0)); };
    return LimitProblem(n, p.omega(), p.nLambda(), p.nMu(), coeff, trace);
}

double evalHomogeneous(const LimitCoefficients& c, const Mat& X, const Vec& pvec, double r) {
    return -(c.A.cwiseProduct(X)).sum() - c.b.dot(pvec) + c.c * r;
}

InfSup<double> evalOperatorG(const LimitProblem& lp, const Mat& X, const Vec& pvec, double r,
                             const Vec& x) {
    return infSup<double>(lp.nLambda(), lp.nMu(), [&](int l, int m) {
        const LimitCoefficients c = lp.coefficients(l, m, x);
        return evalHomogeneous(c, X, pvec, r) - c.f;
    });
}

Mat representationB(const ThinProblem& p, const Vec& x, const Vec& pvec) {
    const Vec off = -(pvec.transpose() * p.gamma0Jacobian(x)).transpose();  // -(p Dgamma0)^T
    return bordered<double>(off, auxDrift(p, x).dot(pvec));
}

Mat representationC(const ThinProblem& p, const Vec& x) {
    return bordered<double>(p.beta0Gradient(x), auxSource(p, x));
}

RepresentationReport representationCheck(const ThinProblem& p, const LimitProblem& lp, int samples,
                                         unsigned long seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> cell(0.0, 1.0);
    const int n = p.dim();
    RepresentationReport rep;
    rep.samples = samples;
    for (int s = 0; s < samples; ++s) {
        Mat X(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) X(i, j) = unit(rng);
        X = (X + X.transpose()) / 2;
        Vec pv(n);
        for (int i = 0; i < n; ++i) pv[i] = unit(rng);
        const double r = unit(rng);
        Vec x(n);
        for (int i = 0; i < n; ++i)
            x[i] = p.omega().lower[i] + cell(rng) * (p.omega().upper[i] - p.omega().lower[i]);

        const double lhs = evalOperatorG(lp, X, pv, r, x).value;
        const Vec g0 = p.gamma0(x);
        const Mat j = reductionMatrix<double>(g0);
        const Mat big = j.transpose() * X * j + representationB(p, x, pv) + representationC(p, x);
        const Vec grad = lift(pv, p.beta0(x) - g0.dot(pv));
        const double rhs = evalOperatorF(p, big, grad, r, lift(x, 0.0)).value;
        const double d = std::abs(lhs - rhs);
        if (d > rep.maxDiscrepancy || rep.worstX.size() == 0) {
            rep.maxDiscrepancy = std::max(rep.maxDiscrepancy, d);
            rep.worstX = x;
        }
    }
    return rep;
}

SubadditivityReport subadditivityCheck(const LimitProblem& lp, int samples, unsigned long seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> cell(0.0, 1.0);
    const int n = lp.dim();
    SubadditivityReport rep;
    rep.samples = samples;
    rep.maxExcess = -std::numeric_limits<double>::infinity();
    auto randomSym = [&] {
        Mat X(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) X(i, j) = unit(rng);
        return Mat((X + X.transpose()) / 2);
    };
    auto randomVec = [&] {
        Vec v(n);
        for (int i = 0; i < n; ++i) v[i] = unit(rng);
        return v;
    };
    for (int s = 0; s < samples; ++s) {
        const Mat x1 = randomSym(), x2 = randomSym();
        const Vec p1 = randomVec(), p2 = randomVec();
        const double r1 = unit(rng), r2 = unit(rng);
        Vec x(n);
        for (int i = 0; i < n; ++i)
            x[i] = lp.domain().lower[i] + cell(rng) * (lp.domain().upper[i] - lp.domain().lower[i]);
        const double diff = evalOperatorG(lp, x1, p1, r1, x).value - evalOperatorG(lp, x2, p2, r2, x).value;
        double sup = -std::numeric_limits<double>::infinity();
        for (int l = 0; l < lp.nLambda(); ++l)
            for (int m = 0; m < lp.nMu(); ++m)
                sup = std::max(sup, evalHomogeneous(lp.coefficients(l, m, x), x1 - x2, p1 - p2, r1 - r2));
        rep.maxExcess = std::max(rep.maxExcess, diff - sup);
    }
    return rep;
}

BoundsReport estimateBounds(const LimitProblem& lp, int perAxis) {
    BoundsReport rep;
    const auto nodes = boxLattice(lp.domain(), perAxis);
    rep.nodes = static_cast<int>(nodes.size());
    for (int l = 0; l < lp.nLambda(); ++l) {
        for (int m = 0; m < lp.nMu(); ++m) {
            std::vector<LimitCoefficients> cs;
            cs.reserve(nodes.size());
            for (const auto& x : nodes) {
                cs.push_back(lp.coefficients(l, m, x));
                const auto& c = cs.back();
                rep.supBound = std::max({rep.supBound, c.sigma.cwiseAbs().maxCoeff(), c.b.cwiseAbs().maxCoeff(),
                                         std::abs(c.c), std::abs(c.f)});
            }
            for (std::size_t i = 0; i < nodes.size(); ++i)
                for (std::size_t j = i + 1; j < nodes.size(); ++j) {
                    const double dist = (nodes[i] - nodes[j]).norm();
                    const double ds = (cs[i].sigma - cs[j].sigma).norm();
                    const double db = (cs[i].b - cs[j].b).norm();
                    rep.lipschitzBound = std::max(rep.lipschitzBound, std::max(ds, db) / dist);
                }
        }
    }
    rep.constant = std::max(rep.supBound, rep.lipschitzBound);
    return rep;
}

}  // namespace thinlim
