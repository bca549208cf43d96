#include "thinlim/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

namespace thinlim {

namespace {

Vec padY(const Vec& x) { return lift(x, 0.0); }

}  // namespace

ThinProblem::ThinProblem(ControlSet controls, CoefficientFamily coeffs, GeometrySpec geom,
                         BoundaryData bdata)
    : controls_(std::move(controls)),
      coeffs_(std::move(coeffs)),
      geom_(std::move(geom)),
      bdata_(std::move(bdata)) {
    const int n = geom_.dim;
    if (n < 1) throw ConfigError("dimension must be at least 1");
    if (geom_.omega.dim() != n) throw ConfigError("domain box does not match the dimension");
    if (controls_.lambdas.empty() || controls_.mus.empty())
        throw ConfigError("control sets must be nonempty");
    if (static_cast<int>(coeffs_.entries.size()) != nLambda() * nMu())
        throw ConfigError("coefficient family does not cover every control pair");
    for (const auto& e : coeffs_.entries) {
        if (static_cast<int>(e.sigma.size()) != coeffs_.k) throw ConfigError("sigma must have k rows");
        for (const auto& row : e.sigma)
            if (static_cast<int>(row.size()) != n + 1) throw ConfigError("sigma rows need N+1 entries");
        if (static_cast<int>(e.b.size()) != n + 1) throw ConfigError("b needs N+1 entries");
    }
    auto fill = [n](VectorFunction& v) {
        if (v.empty()) v.assign(n, ScalarFunction());
        if (static_cast<int>(v.size()) != n) throw ConfigError("vector field needs N entries");
    };
    fill(bdata_.gamma0);
    fill(bdata_.kPlus);
    fill(bdata_.kMinus);
    if (bdata_.gammaPlusRaw && static_cast<int>(bdata_.gammaPlusRaw->size()) != n + 1)
        throw ConfigError("raw gamma_plus needs N+1 entries");
    if (bdata_.gammaMinusRaw && static_cast<int>(bdata_.gammaMinusRaw->size()) != n + 1)
        throw ConfigError("raw gamma_minus needs N+1 entries");
}

const ControlCoefficients& ThinProblem::coefficients(int l, int m) const {
    return coeffs_.entries[static_cast<std::size_t>(l * nMu() + m)];
}

Mat ThinProblem::sigma(int l, int m, const Vec& z) const {
    const auto& e = coefficients(l, m);
    Mat s(k(), dim() + 1);
    for (int i = 0; i < k(); ++i)
        for (int j = 0; j <= dim(); ++j) s(i, j) = e.sigma[i][j](z);
    return s;
}

Mat ThinProblem::diffusion(int l, int m, const Vec& z) const { return diffusionOf(sigma(l, m, z)); }

Vec ThinProblem::drift(int l, int m, const Vec& z) const { return evalAll(coefficients(l, m).b, z); }

double ThinProblem::reaction(int l, int m, const Vec& z) const { return coefficients(l, m).c(z); }

double ThinProblem::source(int l, int m, const Vec& z) const { return coefficients(l, m).f(z); }

double ThinProblem::gPlus(const Vec& x) const { return geom_.gPlus(padY(x)); }
double ThinProblem::gMinus(const Vec& x) const { return geom_.gMinus(padY(x)); }
Vec ThinProblem::gPlusGradient(const Vec& x) const { return geom_.gPlus.gradient(padY(x), dim()); }
Vec ThinProblem::gMinusGradient(const Vec& x) const { return geom_.gMinus.gradient(padY(x), dim()); }

double ThinProblem::h(const Vec& x) const {
    if (bdata_.h) return (*bdata_.h)(padY(x));
    return 0.5 * (gPlus(x) + gMinus(x));
}

Vec ThinProblem::hGradient(const Vec& x) const {
    const Vec z = padY(x);
    if (bdata_.h) return bdata_.h->gradient(z, dim());
    return 0.5 * (geom_.gPlus.gradient(z, dim()) + geom_.gMinus.gradient(z, dim()));
}

Mat ThinProblem::hHessian(const Vec& x) const {
    const Vec z = padY(x);
    if (bdata_.h) return bdata_.h->hessian(z, dim());
    return 0.5 * (geom_.gPlus.hessian(z, dim()) + geom_.gMinus.hessian(z, dim()));
}

Vec ThinProblem::gamma0(const Vec& x) const { return evalAll(bdata_.gamma0, padY(x)); }
Mat ThinProblem::gamma0Jacobian(const Vec& x) const { return jacobian(bdata_.gamma0, padY(x), dim()); }

std::vector<Mat> ThinProblem::gamma0Hessians(const Vec& x) const {
    std::vector<Mat> out;
    const Vec z = padY(x);
    for (const auto& g : bdata_.gamma0) out.push_back(g.hessian(z, dim()));
    return out;
}

double ThinProblem::beta0(const Vec& x) const { return bdata_.beta0(padY(x)); }
Vec ThinProblem::beta0Gradient(const Vec& x) const { return bdata_.beta0.gradient(padY(x), dim()); }
Mat ThinProblem::beta0Hessian(const Vec& x) const { return bdata_.beta0.hessian(padY(x), dim()); }
Vec ThinProblem::kPlus(const Vec& x) const { return evalAll(bdata_.kPlus, padY(x)); }
Vec ThinProblem::kMinus(const Vec& x) const { return evalAll(bdata_.kMinus, padY(x)); }
double ThinProblem::lPlus(const Vec& x) const { return bdata_.lPlus(padY(x)); }
double ThinProblem::lMinus(const Vec& x) const { return bdata_.lMinus(padY(x)); }

double ThinProblem::s(const Vec& x) const { return bdata_.s(padY(x)); }
Vec ThinProblem::sGradient(const Vec& x) const { return bdata_.s.gradient(padY(x), dim()); }
Mat ThinProblem::sHessian(const Vec& x) const { return bdata_.s.hessian(padY(x), dim()); }

Vec ThinProblem::gammaPlus(const Vec& z) const {
    if (bdata_.gammaPlusRaw) return evalAll(*bdata_.gammaPlusRaw, z);
    const int n = dim();
    const Vec x = z.head(n);
    const double y = z[n];
    Vec g(n + 1);
    g.head(n) = gamma0(x) + kPlus(x) * y;
    g[n] = 1.0;
    return g;
}

Vec ThinProblem::gammaMinus(const Vec& z) const {
    if (bdata_.gammaMinusRaw) return evalAll(*bdata_.gammaMinusRaw, z);
    const int n = dim();
    const Vec x = z.head(n);
    const double y = z[n];
    Vec g(n + 1);
    g.head(n) = -gamma0(x) + kMinus(x) * y;
    g[n] = -1.0;
    return g;
}

double ThinProblem::betaPlus(const Vec& z) const {
    if (bdata_.betaPlusRaw) return (*bdata_.betaPlusRaw)(z);
    const Vec x = z.head(dim());
    return beta0(x) + lPlus(x) * z[dim()];
}

double ThinProblem::betaMinus(const Vec& z) const {
    if (bdata_.betaMinusRaw) return (*bdata_.betaMinusRaw)(z);
    const Vec x = z.head(dim());
    return -beta0(x) + lMinus(x) * z[dim()];
}

double ThinProblem::betaLateral(const Vec& z) const { return bdata_.betaLateral(z); }

bool ThinProblem::hasRawBoundary() const {
    return bdata_.gammaPlusRaw || bdata_.gammaMinusRaw || bdata_.betaPlusRaw || bdata_.betaMinusRaw;
}

bool ThinProblem::gamma0IsZero() const {
    for (const auto& g : bdata_.gamma0) {
        if (!g.isConstant()) return false;
        if (g(Vec::Zero(dim() + 1)) != 0.0) return false;
    }
    return true;
}

bool ThinProblem::gamma0IsAffine() const {
    return std::all_of(bdata_.gamma0.begin(), bdata_.gamma0.end(),
                       [](const ScalarFunction& g) { return g.isAffine(); });
}

ThinProblem ThinProblem::withGamma0(VectorFunction gamma0) const {
    BoundaryData b = bdata_;
    b.gamma0 = std::move(gamma0);
    return ThinProblem(controls_, coeffs_, geom_, std::move(b));
}

ThinProblem ThinProblem::withS(ScalarFunction s) const {
    BoundaryData b = bdata_;
    b.s = std::move(s);
    return ThinProblem(controls_, coeffs_, geom_, std::move(b));
}

ThinProblem ThinProblem::withCoefficients(CoefficientFamily coeffs) const {
    return ThinProblem(controls_, std::move(coeffs), geom_, bdata_);
}

ThinProblem ThinProblem::withBoundary(BoundaryData bdata) const {
    return ThinProblem(controls_, coeffs_, geom_, std::move(bdata));
}

const AssumptionCheck* DiagnosticsReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

std::vector<Vec> boxLattice(const Box& box, const std::vector<int>& perAxis) {
    const int d = box.dim();
    std::vector<Vec> nodes;
    std::vector<int> idx(d, 0);
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(perAxis[i]);
    nodes.reserve(total);
    for (std::size_t count = 0; count < total; ++count) {
        Vec x(d);
        for (int i = 0; i < d; ++i) {
            const int n = perAxis[i];
            x[i] = n == 1 ? 0.5 * (box.lower[i] + box.upper[i])
                          : box.lower[i] + (box.upper[i] - box.lower[i]) * idx[i] / (n - 1);
        }
        nodes.push_back(std::move(x));
        for (int i = 0; i < d; ++i) {
            if (++idx[i] < perAxis[i]) break;
            idx[i] = 0;
        }
    }
    return nodes;
}

std::vector<Vec> boxLattice(const Box& box, int perAxis) {
    return boxLattice(box, std::vector<int>(box.dim(), perAxis));
}

namespace {

/// Tracks the smallest value of a quantity that must satisfy `value >= bound`.
struct MinTracker {
    AssumptionCheck check;
    bool seen = false;

    MinTracker(std::string name, std::string failure) {
        check.name = std::move(name);
        check.failure = std::move(failure);
    }
    void observe(double v, const Vec& at, int l = -1, int m = -1) {
        if (!seen || v < check.worst) {
            check.worst = v;
            check.witness = at;
            check.lambda = l;
            check.mu = m;
            seen = true;
        }
    }
    AssumptionCheck finish(bool passed, std::string detail = {}) {
        check.passed = passed;
        if (passed) check.failure.clear();
        check.detail = std::move(detail);
        return check;
    }
};

}  // namespace

DiagnosticsReport validate(const ThinProblem& p, int samplesPerAxis) {
    if (samplesPerAxis < 4) throw PreconditionViolated("validate needs at least 4 samples per axis");
    DiagnosticsReport report;
    const int n = p.dim();
    const Box strip{lift(p.omega().lower, -1.0), lift(p.omega().upper, 1.0)};
    const auto volume = boxLattice(strip, samplesPerAxis);
    const auto base = boxLattice(p.omega(), samplesPerAxis);

    // Control labels.
    {
        AssumptionCheck c;
        c.name = "Controls";
        auto unique = [](const std::vector<std::string>& v) {
            return std::set<std::string>(v.begin(), v.end()).size() == v.size();
        };
        c.passed = !p.controls().lambdas.empty() && !p.controls().mus.empty() &&
                   unique(p.controls().lambdas) && unique(p.controls().mus);
        if (!c.passed) c.failure = "ControlSetInvalid";
        report.checks.push_back(c);
    }

    MinTracker finite("Finite", "NonFiniteValue");
    MinTracker bounded("Boundedness", "BoundednessViolated");
    MinTracker nonneg("NonNegativity", "NonNegativityViolated");
    MinTracker psd("DegenerateEllipticity", "PSDViolated");
    bool allFinite = true;
    std::string finiteDetail;
    double supNorm = 0.0;
    for (int l = 0; l < p.nLambda(); ++l) {
        for (int m = 0; m < p.nMu(); ++m) {
            for (const auto& z : volume) {
                try {
                    const Mat s = p.sigma(l, m, z);
                    const Vec b = p.drift(l, m, z);
                    const double c = p.reaction(l, m, z);
                    const double f = p.source(l, m, z);
                    const double norm = std::max({s.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(),
                                                  std::abs(c), std::abs(f)});
                    bounded.observe(-norm, z, l, m);
                    supNorm = std::max(supNorm, norm);
                    nonneg.observe(c, z, l, m);
                    psd.observe(minEigenvalue(diffusionOf(s)), z, l, m);
                } catch (const DomainError& e) {
                    if (allFinite) {
                        finite.observe(0.0, z, l, m);
                        finiteDetail = e.what();
                    }
                    allFinite = false;
                }
            }
        }
    }
    report.checks.push_back(finite.finish(allFinite, finiteDetail));
    const double cf = p.family().boundCF;
    report.checks.push_back(bounded.finish(cf <= 0.0 || supNorm <= cf,
                                           "sup-norm " + std::to_string(supNorm)));
    report.checks.push_back(nonneg.finish(nonneg.check.worst >= 0.0));
    report.checks.push_back(psd.finish(psd.check.worst >= -1e-10));

    MinTracker order("StrictOrdering", "StrictOrderingViolated");
    MinTracker contain("Containment", "ContainmentViolated");
    MinTracker hOrder("ProfileOrdering", "ProfileOrderingViolated");
    MinTracker dataFinite("BoundaryDataFinite", "NonFiniteValue");
    bool dataOk = true;
    for (const auto& x : base) {
        try {
            const double gp = p.gPlus(x), gm = p.gMinus(x);
            order.observe(gp - gm, x);
            contain.observe(1.0 - p.epsilon0() * std::max(std::abs(gp), std::abs(gm)), x);
            const double hx = p.h(x);
            hOrder.observe(std::min(gp - hx, hx - gm), x);
            // Touch every remaining data field so domain errors surface here.
            (void)p.gamma0(x);
            (void)p.beta0(x);
            (void)p.kPlus(x);
            (void)p.kMinus(x);
            (void)p.lPlus(x);
            (void)p.lMinus(x);
            (void)p.s(x);
        } catch (const DomainError& e) {
            if (dataOk) {
                dataFinite.observe(0.0, x);
                dataFinite.check.detail = e.what();
            }
            dataOk = false;
        }
    }
    report.checks.push_back(dataFinite.finish(dataOk, dataFinite.check.detail));
    report.checks.push_back(order.finish(order.check.worst > 0.0));
    report.checks.push_back(contain.finish(contain.check.worst >= 0.0));
    report.checks.push_back(hOrder.finish(hOrder.check.worst > 0.0));

    // Oblique normalization and compatibility only bite for raw boundary data;
    // the synthesized fields satisfy both by construction.
    MinTracker oblique("ObliqueNormalization", "ObliqueNormalizationViolated");
    MinTracker compat("Compatibility", "CompatibilityViolated");
    for (const auto& z : volume) {
        try {
            const double e1 = std::abs(p.gammaPlus(z)[n] - 1.0);
            const double e2 = std::abs(p.gammaMinus(z)[n] + 1.0);
            oblique.observe(-std::max(e1, e2), z);
        } catch (const DomainError&) {
            oblique.observe(-1.0, z);
        }
    }
    for (const auto& x : base) {
        try {
            const Vec z = lift(x, 0.0);
            const double b0 = p.beta0(x);
            const double e = std::max(std::abs(p.betaPlus(z) - b0), std::abs(p.betaMinus(z) + b0));
            Vec gdiff = p.gammaPlus(z).head(n) - p.gamma0(x);
            Vec gdiff2 = p.gammaMinus(z).head(n) + p.gamma0(x);
            const double eg = std::max(gdiff.cwiseAbs().maxCoeff(), gdiff2.cwiseAbs().maxCoeff());
            compat.observe(-std::max(e, eg), x);
        } catch (const DomainError&) {
            compat.observe(-1.0, x);
        }
    }
    report.checks.push_back(oblique.finish(oblique.check.worst >= -1e-12));
    report.checks.push_back(compat.finish(compat.check.worst >= -1e-10));

    report.passed = std::all_of(report.checks.begin(), report.checks.end(),
                                [](const AssumptionCheck& c) { return c.passed; });
    return report;
}

InfSup<double> evalOperatorF(const ThinProblem& p, const Mat& X, const Vec& pvec, double r,
                             const Vec& z) {
    return infSup<double>(p.nLambda(), p.nMu(), [&](int l, int m) {
        return affineOperator<double>(p.diffusion(l, m, z), p.drift(l, m, z), p.reaction(l, m, z),
                                      p.source(l, m, z), X, pvec, r);
    });
}

}  // namespace thinlim
