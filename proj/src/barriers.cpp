#include "thinlim/barriers.hpp"

#include "thinlim/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace thinlim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const char* const kMarginNames[7] = {"m.1", "m.2", "m.3", "m.4", "m.5", "m.6", "m.7"};

Jet xJet(double v, Vec g, Mat h) { return Jet{v, std::move(g), std::move(h)}; }

bool onBoxBoundary(const Box& b, const Vec& x) {
    for (int i = 0; i < b.dim(); ++i)
        if (x[i] <= b.lower[i] || x[i] >= b.upper[i]) return true;
    return false;
}

std::vector<Vec> strip1d(double lo, double hi, int n) {
    std::vector<Vec> out;
    for (int j = 0; j < n; ++j) {
        Vec v(1);
        v[0] = n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * j / (n - 1);
        out.push_back(v);
    }
    return out;
}

int latticeAxis(int dim, int nx) { return dim == 1 ? nx : std::max(5, nx / 4 + 1); }

}  // namespace

InfSup<double> StripProblem::evalOperator(const Mat& X, const Vec& p, double u, const Vec& x, double y) const {
    return infSup<double>(nLambda, nMu, [&](int l, int m) {
        const HatCoefficients c = coefficients(l, m, x, y);
        return affineOperator<double>(c.A, c.b, c.c, c.f, X, p, u);
    });
}

StripProblem originalStrip(const ThinProblem& p) {
    StripProblem sp;
    sp.dim = p.dim();
    sp.nLambda = p.nLambda();
    sp.nMu = p.nMu();
    sp.domain = p.omega();
    sp.epsilon0 = p.epsilon0();
    sp.r = 0.5;
    sp.gSup = 0.0;
    for (const Vec& x : boxLattice(p.omega(), latticeAxis(p.dim(), 33)))
        sp.gSup = std::max({sp.gSup, std::abs(p.gPlus(x)), std::abs(p.gMinus(x))});
    sp.coefficients = [p](int l, int m, const Vec& x, double y) {
        const Vec z = lift(x, y);
        HatCoefficients c;
        c.sigma = p.sigma(l, m, z);
        c.A = diffusionOf(c.sigma);
        c.b = p.drift(l, m, z);
        c.c = p.reaction(l, m, z);
        c.f = p.source(l, m, z);
        return c;
    };
    sp.gammaPlus = [p](const Vec& x, double y) { return p.gammaPlus(lift(x, y)); };
    sp.gammaMinus = [p](const Vec& x, double y) { return p.gammaMinus(lift(x, y)); };
    sp.betaPlus = [p](const Vec& x, double y) { return p.betaPlus(lift(x, y)); };
    sp.betaMinus = [p](const Vec& x, double y) { return p.betaMinus(lift(x, y)); };
    sp.betaLateral = [p](const Vec& x, double y) { return p.betaLateral(lift(x, y)); };
    sp.top = [p](const Vec& x, double eps) { return eps * p.gPlus(x); };
    sp.bottom = [p](const Vec& x, double eps) { return eps * p.gMinus(x); };
    sp.beta0 = [p](const Vec& x) { return xJet(p.beta0(x), p.beta0Gradient(x), p.beta0Hessian(x)); };
    sp.s = [p](const Vec& x) { return xJet(p.s(x), p.sGradient(x), p.sHessian(x)); };
    sp.h = [p](const Vec& x) { return xJet(p.h(x), p.hGradient(x), p.hHessian(x)); };
    return sp;
}

StripProblem hatStrip(const ThinProblem& p, const DistortionMap& map) {
    StripProblem sp = originalStrip(p);
    const HatOperator hat(p, map);
    const HatBoundary hb(p, map);
    sp.domain = map.hatDomain(p.omega());
    sp.r = map.r();
    sp.gSup = 0.0;
    for (const Vec& z : boxLattice(sp.domain, latticeAxis(p.dim(), 33)))
        sp.gSup = std::max({sp.gSup, std::abs(p.gPlus(z)), std::abs(p.gMinus(z))});
    sp.coefficients = [hat](int l, int m, const Vec& z, double y) { return hat.coefficients(l, m, z, y); };
    sp.gammaPlus = [hb](const Vec& z, double y) { return hb.gammaPlus(z, y); };
    sp.gammaMinus = [hb](const Vec& z, double y) { return hb.gammaMinus(z, y); };
    sp.betaPlus = [hb](const Vec& z, double y) { return hb.betaPlus(z, y); };
    sp.betaMinus = [hb](const Vec& z, double y) { return hb.betaMinus(z, y); };
    sp.betaLateral = nullptr;
    const ScalarFunction gp = p.geometry().gPlus, gm = p.geometry().gMinus;
    sp.top = [map, gp](const Vec& z, double eps) { return map.profile(gp, eps, z); };
    sp.bottom = [map, gm](const Vec& z, double eps) { return map.profile(gm, eps, z); };
    return sp;
}

Jet chiJet(const StripProblem& sp, const BarrierParams& bp, const Vec& x) {
    const Jet s = sp.s(x);
    const double k = bp.sScale;
    const Vec ds = k * s.grad;
    const double chi = std::exp(bp.alpha * k * (s.value - bp.sShift));
    Jet out;
    out.value = chi;
    out.grad = bp.alpha * chi * ds;
    out.hess = bp.alpha * bp.alpha * chi * ds * ds.transpose() + bp.alpha * chi * k * s.hess;
    return out;
}

namespace {

/// Value, gradient and Hessian in (x, y) of rho + beta0 y + sign alpha Lambda chi q^2,
/// with rho taken with sign `sign` as well.
Jet stepOneJet(const StripProblem& sp, const BarrierParams& bp, double eps, const Vec& x, double y, double sign) {
    const int n = sp.dim;
    const Jet chi = chiJet(sp, bp, x);
    const Jet b0 = sp.beta0(x);
    const Jet h = sp.h(x);
    const double al = bp.alpha * bp.Lambda;
    const double q = y - eps * h.value;
    const Vec dq = -eps * h.grad;
    const Mat d2q = -eps * h.hess;

    Jet out;
    out.grad = Vec::Zero(n + 1);
    out.hess = Mat::Zero(n + 1, n + 1);
    const double rho = bp.C_D + (bp.C_alpha - chi.value);
    const double e = al * chi.value * q * q;
    out.value = sign * (rho + e) + b0.value * y;

    const Vec eX = al * (chi.grad * q * q + 2.0 * chi.value * q * dq);
    const double eY = 2.0 * al * chi.value * q;
    out.grad.head(n) = sign * (-chi.grad + eX) + y * b0.grad;
    out.grad[n] = sign * eY + b0.value;

    const Mat cross = chi.grad * dq.transpose();
    const Mat eXX = al * (chi.hess * q * q + 2.0 * q * (cross + cross.transpose()) +
                          2.0 * chi.value * (dq * dq.transpose() + q * d2q));
    const Vec eXY = al * (2.0 * q * chi.grad + 2.0 * chi.value * dq);
    out.hess.topLeftCorner(n, n) = sign * (-chi.hess + eXX) + y * b0.hess;
    out.hess.block(0, n, n, 1) = sign * eXY + b0.grad;
    out.hess.block(n, 0, 1, n) = out.hess.block(0, n, n, 1).transpose();
    out.hess(n, n) = sign * 2.0 * al * chi.value;
    return out;
}

void requireFlat(const StripProblem& sp) {
    for (const Vec& x : boxLattice(sp.domain, latticeAxis(sp.dim, 17))) {
        const double t = std::max(sp.gammaPlus(x, 0.0).head(sp.dim).cwiseAbs().maxCoeff(),
                                  sp.gammaMinus(x, 0.0).head(sp.dim).cwiseAbs().maxCoeff());
        if (t > 1e-10)
            throw PreconditionViolated("gamma0 is nonzero at x1=" + std::to_string(x[0]) +
                                       "; use generalBarrier");
    }
}

struct Scan {
    std::array<double, 7> m{kInf, kInf, kInf, kInf, kInf, kInf, kInf};
    double lateral = kInf;
    double maxAbs = 0.0;
    /// m.3 and m.6 with the reaction term dropped.
    double m3NoC = kInf;
    double m6NoC = kInf;
    int nodes = 0;

    void merge(const Scan& o) {
        for (int i = 0; i < 7; ++i) m[i] = std::min(m[i], o.m[i]);
        lateral = std::min(lateral, o.lateral);
        maxAbs = std::max(maxAbs, o.maxAbs);
        m3NoC = std::min(m3NoC, o.m3NoC);
        m6NoC = std::min(m6NoC, o.m6NoC);
        nodes += o.nodes;
    }
};

Scan scanColumn(const StripProblem& sp, const BarrierPair& pair, double eps, const Vec& x, int ny) {
    Scan sc;
    const double yb = sp.bottom(x, eps), yt = sp.top(x, eps);
    const bool lateral = sp.betaLateral && onBoxBoundary(sp.domain, x);
    for (int j = 0; j < ny; ++j) {
        const double y = j == ny - 1 ? yt : yb + (yt - yb) * j / (ny - 1);
        const Jet up = pair.upper(x, y);
        const Jet lo = pair.lower(x, y);
        ++sc.nodes;
        sc.maxAbs = std::max({sc.maxAbs, std::abs(up.value), std::abs(lo.value)});
        sc.m[6] = std::min(sc.m[6], up.value - lo.value);
        sc.m[2] = std::min(sc.m[2], sp.evalOperator(up.hess, up.grad, up.value, x, y).value);
        sc.m[5] = std::min(sc.m[5], -sp.evalOperator(lo.hess, lo.grad, lo.value, x, y).value);
        sc.m3NoC = std::min(sc.m3NoC, sp.evalOperator(up.hess, up.grad, 0.0, x, y).value);
        sc.m6NoC = std::min(sc.m6NoC, -sp.evalOperator(lo.hess, lo.grad, 0.0, x, y).value);
        if (j == ny - 1) {
            const Vec g = sp.gammaPlus(x, y);
            const double beta = sp.betaPlus(x, y);
            sc.m[0] = std::min(sc.m[0], g.dot(up.grad) - beta);
            sc.m[3] = std::min(sc.m[3], beta - g.dot(lo.grad));
        }
        if (j == 0) {
            const Vec g = sp.gammaMinus(x, y);
            const double beta = sp.betaMinus(x, y);
            sc.m[1] = std::min(sc.m[1], g.dot(up.grad) - beta);
            sc.m[4] = std::min(sc.m[4], beta - g.dot(lo.grad));
        }
        if (lateral) {
            const double b = sp.betaLateral(x, y);
            sc.lateral = std::min({sc.lateral, up.value - b, b - lo.value});
        }
    }
    return sc;
}

Scan scanAll(const StripProblem& sp, const BarrierPair& pair, double eps, const VerifyGrid& grid, int threads) {
    const auto xs = boxLattice(sp.domain, latticeAxis(sp.dim, grid.nx));
    std::vector<Scan> cols(xs.size());
    parallelFor(xs.size(), threads, [&](std::size_t i) { cols[i] = scanColumn(sp, pair, eps, xs[i], grid.ny); });
    Scan total;
    for (const auto& c : cols) total.merge(c);
    return total;
}

BarrierMargins toMargins(const Scan& sc) {
    BarrierMargins out;
    out.m = sc.m;
    out.C = sc.maxAbs + 1.0;
    out.m[6] = std::min(1.0, sc.m[6]);
    out.lateral = sc.lateral;
    out.nodes = sc.nodes;
    out.passed = true;
    for (int i = 0; i < 7; ++i) {
        if (!(out.m[i] > 0.0)) {
            out.passed = false;
            out.failing = kMarginNames[i];
            return out;
        }
    }
    if (!(out.lateral > 0.0)) {
        out.passed = false;
        out.failing = "lateral";
    }
    return out;
}

}  // namespace

BarrierPair buildBarrier(const StripProblem& sp, const BarrierParams& params, double eps) {
    requireFlat(sp);
    if (!(eps > 0.0)) throw PreconditionViolated("eps must be positive");
    if (params.eps1 > 0.0 && !(eps < params.eps1)) throw PreconditionViolated("eps must be below eps1");
    BarrierPair pair;
    pair.params = params;
    pair.eps = eps;
    pair.upper = [sp, params, eps](const Vec& x, double y) { return stepOneJet(sp, params, eps, x, y, 1.0); };
    pair.lower = [sp, params, eps](const Vec& x, double y) { return stepOneJet(sp, params, eps, x, y, -1.0); };
    return pair;
}

BarrierPair buildBarrier(const ThinProblem& p, const BarrierParams& params, double eps) {
    return buildBarrier(originalStrip(p), params, eps);
}

BarrierMargins verifyBarrier(const StripProblem& sp, const BarrierPair& pair, double eps, const VerifyGrid& grid,
                             int threads) {
    return toMargins(scanAll(sp, pair, eps, grid, threads));
}

namespace {

double epsCandidate(const StripProblem& sp, const BarrierParams& bp) {
    double e = std::min({sp.epsilon0, 1.0 / bp.alpha, 1.0 / bp.Lambda});
    if (sp.gSup > 0.0) e = std::min(e, sp.r / sp.gSup);
    return 0.999 * e;
}

void normalizePotential(const StripProblem& sp, BarrierParams& bp) {
    const int n = sp.dim;
    const auto xs = boxLattice(sp.domain, latticeAxis(n, 33));
    double smin = kInf, smax = -kInf;
    for (const Vec& x : xs) {
        const double v = sp.s(x).value;
        smin = std::min(smin, v);
        smax = std::max(smax, v);
    }
    double m = kInf;
    Vec witness;
    for (const Vec& x : xs) {
        RowVec v = RowVec::Zero(n + 1);
        v.head(n) = sp.s(x).grad.transpose();
        for (const Vec& yv : strip1d(-sp.r, sp.r, 9)) {
            for (int l = 0; l < sp.nLambda; ++l)
                for (int mu = 0; mu < sp.nMu; ++mu) {
                    const double q = quadForm(v, sp.coefficients(l, mu, x, yv[0]).A);
                    if (q < m) {
                        m = q;
                        witness = x;
                    }
                }
        }
    }
    if (!(m > 1e-12))
        throw SearchExhausted("positive**", "(Ds,0)A(Ds,0)^T = " + std::to_string(m) + " at x1=" +
                                                std::to_string(witness[0]) + "; s cannot be normalized");
    bp.sShift = smin;
    bp.sScale = 1.0 / std::sqrt(m);
    bp.r = sp.r;
    (void)smax;
}

void refreshCAlpha(const StripProblem& sp, BarrierParams& bp) {
    double smax = -kInf;
    for (const Vec& x : boxLattice(sp.domain, latticeAxis(sp.dim, 33))) smax = std::max(smax, sp.s(x).value);
    bp.C_alpha = std::exp(bp.alpha * bp.sScale * (smax - bp.sShift));
}

BarrierPair trial(const StripProblem& sp, BarrierParams bp, double eps) {
    bp.eps1 = 0.0;
    return buildBarrier(sp, bp, eps);
}

}  // namespace

BarrierParams searchParameters(const StripProblem& sp, const SearchOptions& opt) {
    requireFlat(sp);
    BarrierParams bp;
    normalizePotential(sp, bp);
    refreshCAlpha(sp, bp);
    const VerifyGrid coarse = opt.grids.empty() ? VerifyGrid{} : opt.grids.front();

    // Lambda and the s-scale are fixed on the leading-order inequalities; the
    // O(eps) remainders are left to the eps1 stage.
    auto probes = [&] {
        const double e = epsCandidate(sp, bp);
        return std::vector<double>{e / 8, e / 16};
    };
    auto boundaryOk = [&] {
        for (double e : probes()) {
            const Scan sc = scanAll(sp, trial(sp, bp, e), e, coarse, opt.threads);
            if (!(sc.m[0] > 0 && sc.m[1] > 0 && sc.m[3] > 0 && sc.m[4] > 0)) return false;
        }
        return true;
    };
    auto interiorOk = [&] {
        for (double e : probes()) {
            const Scan sc = scanAll(sp, trial(sp, bp, e), e, coarse, opt.threads);
            if (!(sc.m3NoC > 0 && sc.m6NoC > 0)) return false;
        }
        return true;
    };
    auto fullOk = [&](const std::vector<double>& eps, const std::vector<VerifyGrid>& grids, std::string& failing) {
        for (const auto& g : grids)
            for (double e : eps) {
                const BarrierMargins mg = verifyBarrier(sp, trial(sp, bp, e), e, g, opt.threads);
                if (!mg.passed) {
                    failing = mg.failing;
                    return false;
                }
            }
        return true;
    };

    bool stable = false;
    for (int outer = 0; outer < opt.budget && !stable; ++outer) {
        int k = 0;
        while (!boundaryOk()) {
            if (++k > opt.budget) throw SearchExhausted("m.1/m.2", "Lambda budget exhausted at " + std::to_string(bp.Lambda));
            bp.Lambda *= 2;
        }
        stable = true;
        k = 0;
        while (!interiorOk()) {
            if (++k > opt.budget) throw SearchExhausted("m.3", "s-scale budget exhausted at " + std::to_string(bp.sScale));
            bp.sScale *= 2;
            refreshCAlpha(sp, bp);
            stable = false;
        }
    }
    if (!stable) throw SearchExhausted("m.1/m.3", "Lambda and s-scale did not settle");

    std::string failing;
    int k = 0;
    while (!fullOk(probes(), {coarse}, failing)) {
        if (++k > opt.budget) throw SearchExhausted(failing, "C_D budget exhausted at " + std::to_string(bp.C_D));
        bp.C_D *= 2;
    }

    double eps1 = epsCandidate(sp, bp);
    for (int i = 0; i <= opt.budget; ++i, eps1 /= 2) {
        if (fullOk({eps1 / 2, eps1 / 4, 0.99 * eps1}, opt.grids, failing)) {
            bp.eps1 = eps1;
            return bp;
        }
    }
    throw SearchExhausted(failing, "eps1 budget exhausted");
}

BarrierParams searchParameters(const ThinProblem& p, const SearchOptions& opt) {
    return searchParameters(originalStrip(p), opt);
}

Jet pullback(const DistortionMap& map, const BarrierFn& w, const Vec& x, double y) {
    const int n = map.dim();
    const Vec z = map.inverse(x, y);
    const Jet jw = w(z, y);
    const Mat r = map.matrixR(z, y);
    const auto h = map.hessianQImplicit(x, y);
    Jet out;
    out.value = jw.value;
    out.grad = r.transpose() * jw.grad;
    out.hess = r.transpose() * jw.hess * r;
    for (int k = 0; k <= n; ++k) out.hess += jw.grad[k] * h[k];
    return out;
}

GeneralBarrier generalBarrier(const ThinProblem& p, const DistortionMap& map, double eps, const SearchOptions& opt) {
    return pullBackBarrier(p, map, searchParameters(hatStrip(p, map), opt), eps, opt);
}

GeneralBarrier pullBackBarrier(const ThinProblem& p, const DistortionMap& map, const BarrierParams& params,
                               double eps, const SearchOptions& opt) {
    GeneralBarrier gb;
    gb.hat = hatStrip(p, map);
    gb.original = originalStrip(p);
    gb.params = params;
    if (!(eps > 0.0)) eps = gb.params.eps1 / 2;
    const VerifyGrid fine = opt.grids.empty() ? VerifyGrid{} : opt.grids.back();
    for (int k = 0; k <= opt.budget; ++k) {
        gb.hatted = buildBarrier(gb.hat, gb.params, eps);
        gb.hatted.margins = verifyBarrier(gb.hat, gb.hatted, eps, fine, opt.threads);
        gb.pulled.params = gb.params;
        gb.pulled.eps = eps;
        const BarrierFn wu = gb.hatted.upper, wl = gb.hatted.lower;
        gb.pulled.upper = [map, wu](const Vec& x, double y) { return pullback(map, wu, x, y); };
        gb.pulled.lower = [map, wl](const Vec& x, double y) { return pullback(map, wl, x, y); };
        gb.pulled.margins = verifyBarrier(gb.original, gb.pulled, eps, fine, opt.threads);
        if (gb.pulled.margins.passed) return gb;
        if (gb.pulled.margins.failing != "lateral") break;
        gb.params.C_D *= 2;
    }
    throw SearchExhausted(gb.pulled.margins.failing, "pulled-back barrier fails on the original strip");
}

BarrierFamily findBarriers(const ThinProblem& p, const SearchOptions& opt) {
    BarrierFamily fam;
    fam.problem = p;
    fam.options = opt;
    fam.distorted = !p.gamma0IsZero();
    if (fam.distorted) {
        fam.map = DistortionMap::fromProblem(p);
        fam.params = generalBarrier(p, fam.map, 0.0, opt).params;
    } else {
        fam.params = searchParameters(originalStrip(p), opt);
    }
    return fam;
}

BarrierPair BarrierFamily::at(double eps) const {
    const VerifyGrid fine = options.grids.empty() ? VerifyGrid{} : options.grids.back();
    if (distorted) return pullBackBarrier(problem, map, params, eps, options).pulled;
    const StripProblem sp = originalStrip(problem);
    BarrierPair pair = buildBarrier(sp, params, eps);
    pair.margins = verifyBarrier(sp, pair, eps, fine, options.threads);
    return pair;
}

ChainRuleReport chainRuleCheck(const GeneralBarrier& gb, const DistortionMap& map, const ThinProblem& p,
                               double eps, int samples, unsigned long seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n = p.dim();
    ChainRuleReport rep;
    rep.samples = samples;
    for (int s = 0; s < samples; ++s) {
        Vec x(n);
        for (int i = 0; i < n; ++i)
            x[i] = p.omega().lower[i] + unit(rng) * (p.omega().upper[i] - p.omega().lower[i]);
        const double lo = eps * p.gMinus(x), hi = eps * p.gPlus(x);
        const double y = lo + unit(rng) * (hi - lo);
        const Vec z = map.inverse(x, y);
        for (const BarrierFn* w : {&gb.hatted.upper, &gb.hatted.lower}) {
            const Jet psi = pullback(map, *w, x, y);
            const Jet jw = (*w)(z, y);
            const double lhs = evalOperatorF(p, psi.hess, psi.grad, psi.value, lift(x, y)).value;
            const double rhs = gb.hat.evalOperator(jw.hess, jw.grad, jw.value, z, y).value;
            rep.maxDiscrepancy = std::max(rep.maxDiscrepancy, std::abs(lhs - rhs));
            rep.magnitude = std::max(rep.magnitude, std::abs(lhs));
        }
    }
    return rep;
}

}  // namespace thinlim
