#include "thinlim/transform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace thinlim {

DistortionMap::DistortionMap(VectorFunction gamma, double r, double tolFixedPoint, int maxIter)
    : gamma_(std::move(gamma)), r_(r), tol_(tolFixedPoint), maxIter_(maxIter) {
    if (!(r_ > 0.0 && r_ < 1.0)) throw PreconditionViolated("strip half-height r must lie in (0, 1)");
}

double DistortionMap::selectRadius(const ThinProblem& p, int perAxis) {
    const int n = p.dim();
    double gSup = 0.0;
    for (const Vec& x : boxLattice(p.omega(), perAxis)) gSup = std::max(gSup, p.gamma0(x).norm());
    const Box region = p.omega().inflated(0.5 * gSup);
    double dgSup = 0.0, gpSup = 0.0, regionSup = 0.0;
    for (const Vec& x : boxLattice(region, perAxis)) {
        const Vec z = lift(x, 0.0);
        Eigen::JacobiSVD<Mat> svd(jacobian(p.boundary().gamma0, z, n));
        dgSup = std::max(dgSup, svd.singularValues()(0));
        gpSup = std::max({gpSup, p.gPlusGradient(x).norm(), p.gMinusGradient(x).norm()});
        regionSup = std::max(regionSup, p.gamma0(x).norm());
    }
    double r = 0.5;
    for (int k = 0; k < 60; ++k) {
        if (r * dgSup <= 0.5 && r * gpSup * regionSup <= 0.5) return r;
        r /= 2;
    }
    throw PreconditionViolated("no admissible strip half-height r");
}

DistortionMap DistortionMap::fromProblem(const ThinProblem& p) {
    return DistortionMap(p.boundary().gamma0, selectRadius(p));
}

bool DistortionMap::affine() const {
    return std::all_of(gamma_.begin(), gamma_.end(), [](const ScalarFunction& g) { return g.isAffine(); });
}

Vec DistortionMap::gamma(const Vec& z) const { return evalAll(gamma_, lift(z, 0.0)); }

Mat DistortionMap::gammaJacobian(const Vec& z) const { return jacobian(gamma_, lift(z, 0.0), dim()); }

double DistortionMap::gammaSup(const Box& region, int perAxis) const {
    double s = 0.0;
    for (const Vec& z : boxLattice(region, perAxis)) s = std::max(s, gamma(z).norm());
    return s;
}

Vec DistortionMap::forward(const Vec& z, double y) const { return lift(z + y * gamma(z), y); }

Vec DistortionMap::inverse(const Vec& x, double y) const {
    Vec z = x;
    double last = std::numeric_limits<double>::infinity();
    int polish = -1;
    for (int it = 0; it < maxIter_; ++it) {
        const Vec next = x - y * gamma(z);
        const double step = (next - z).cwiseAbs().maxCoeff();
        z = next;
        if (polish < 0 && step <= tol_) polish = 3;
        if (polish >= 0) {
            // A few extra sweeps take the residual down to rounding level.
            if (polish-- == 0 || step == 0.0 || step >= last) return z;
        }
        last = step;
    }
    if (polish >= 0) return z;
    throw NoConvergence(maxIter_, "inverse distortion");
}

Mat DistortionMap::matrixR(const Vec& z, double y) const {
    Mat out;
    if (!distortionR<double>(gamma(z), gammaJacobian(z), y, out))
        throw SingularJacobian("I + y Dgamma is singular");
    return out;
}

Mat DistortionMap::jacobianQ(const Vec& x, double y) const { return matrixR(inverse(x, y), y); }

std::vector<Mat> DistortionMap::hessianQFiniteDifference(const Vec& x, double y, double step) const {
    const int n = dim();
    auto q = [&](const Vec& w) { return inverse(w.head(n), w[n]); };
    const Vec w0 = lift(x, y);
    const Vec q0 = q(w0);
    std::vector<Mat> out(n + 1, Mat::Zero(n + 1, n + 1));
    for (int j = 0; j <= n; ++j) {
        for (int k = j; k <= n; ++k) {
            Vec d2;
            if (j == k) {
                Vec wp = w0, wm = w0;
                wp[j] += step;
                wm[j] -= step;
                d2 = (q(wp) - 2 * q0 + q(wm)) / (step * step);
            } else {
                auto at = [&](double sj, double sk) {
                    Vec w = w0;
                    w[j] += sj * step;
                    w[k] += sk * step;
                    return q(w);
                };
                d2 = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4 * step * step);
            }
            for (int i = 0; i < n; ++i) out[i](j, k) = out[i](k, j) = d2[i];
        }
    }
    return out;
}

std::vector<Mat> DistortionMap::hessianQImplicit(const Vec& x, double y) const {
    const int n = dim();
    const Vec z = inverse(x, y);
    const Mat r = matrixR(z, y);
    const Mat dg = gammaJacobian(z);
    std::vector<Mat> gh;  // gh[i] = Hessian of gamma_i
    for (const auto& g : gamma_) gh.push_back(g.hessian(lift(z, 0.0), n));

    // Derivatives of DP(z, y) with respect to z_m and y.
    std::vector<Mat> dDP(n + 1, Mat::Zero(n + 1, n + 1));
    for (int m = 0; m < n; ++m) {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) dDP[m](i, j) = y * gh[i](m, j);
            dDP[m](i, n) = dg(i, m);
        }
    }
    dDP[n].topLeftCorner(n, n) = dg;

    std::vector<Mat> out(n + 1, Mat::Zero(n + 1, n + 1));
    for (int k = 0; k <= n; ++k) {
        Mat inner = Mat::Zero(n + 1, n + 1);
        for (int m = 0; m <= n; ++m) inner += dDP[m] * r(m, k);
        const Mat dk = -r * inner * r;  // d_k of DQ
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j <= n; ++j) out[i](j, k) = dk(i, j);
    }
    for (auto& h : out) h = (h + h.transpose()) / 2;
    return out;
}

std::vector<Mat> DistortionMap::hessianQ(const Vec& x, double y) const {
    return affine() ? hessianQImplicit(x, y) : hessianQFiniteDifference(x, y);
}

double DistortionMap::profile(const ScalarFunction& g, double eps, const Vec& z) const {
    const Vec gz = gamma(z);
    auto f = [&](double y) { return y - eps * g(lift(z + y * gz, 0.0)); };
    double lo = -r_, hi = r_;
    double flo = f(lo), fhi = f(hi);
    if (flo > 0.0 || fhi < 0.0) throw PreconditionViolated("profile root is not bracketed by [-r, r]");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (std::abs(fm) <= 1e-12 && hi - lo <= 1e-13) return mid;
        if (fm == 0.0) return mid;
        if (fm < 0.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 4e-16 * std::max(1.0, std::abs(mid))) break;
    }
    return 0.5 * (lo + hi);
}

Box DistortionMap::hatDomain(const Box& omega) const {
    const double s0 = gammaSup(omega);
    const double s1 = gammaSup(omega.inflated(2.0 * r_ * s0));
    return omega.inflated(r_ * s1);
}

HatCoefficients HatOperator::coefficients(int l, int m, const Vec& z, double y) const {
    const Vec x = map_.forward(z, y);
    const Mat r = map_.matrixR(z, y);
    HatCoefficients out;
    out.sigma = p_.sigma(l, m, x) * r.transpose();
    out.A = diffusionOf(out.sigma);
    out.b = r * p_.drift(l, m, x) + curvatureDrift(l, m, x.head(p_.dim()), y);
    out.c = p_.reaction(l, m, x);
    out.f = p_.source(l, m, x);
    return out;
}

Vec HatOperator::curvatureDrift(int l, int m, const Vec& x, double y) const {
    const int n = p_.dim();
    const Mat a = p_.diffusion(l, m, lift(x, y));
    const auto h = map_.hessianQ(x, y);
    Vec d(n + 1);
    for (int i = 0; i <= n; ++i) d[i] = a.cwiseProduct(h[i]).sum();
    return d;
}

InfSup<double> HatOperator::evalOperator(const Mat& X, const Vec& p, double r, const Vec& z, double y) const {
    return infSup<double>(p_.nLambda(), p_.nMu(), [&](int l, int m) {
        const HatCoefficients c = coefficients(l, m, z, y);
        return affineOperator<double>(c.A, c.b, c.c, c.f, X, p, r);
    });
}

HatOperator pushforward(const ThinProblem& p, const DistortionMap& map) { return HatOperator(p, map); }

Vec HatBoundary::gammaPlus(const Vec& z, double y) const {
    return map_.matrixR(z, y) * p_.gammaPlus(map_.forward(z, y));
}

Vec HatBoundary::gammaMinus(const Vec& z, double y) const {
    return map_.matrixR(z, y) * p_.gammaMinus(map_.forward(z, y));
}

double HatBoundary::betaPlus(const Vec& z, double y) const { return p_.betaPlus(map_.forward(z, y)); }

double HatBoundary::betaMinus(const Vec& z, double y) const { return p_.betaMinus(map_.forward(z, y)); }

HatBoundary hatBoundary(const ThinProblem& p, const DistortionMap& map) { return HatBoundary(p, map); }

HatBoundaryReport checkHatBoundary(const ThinProblem& p, const DistortionMap& map, int perAxis) {
    const int n = p.dim();
    const HatBoundary hb(p, map);
    const Box dom = map.hatDomain(p.omega());
    HatBoundaryReport rep;
    const Box strip{lift(dom.lower, -map.r()), lift(dom.upper, map.r())};
    for (const Vec& w : boxLattice(strip, perAxis)) {
        const Vec z = w.head(n);
        rep.lastComponentError = std::max({rep.lastComponentError, std::abs(hb.gammaPlus(z, w[n])[n] - 1.0),
                                           std::abs(hb.gammaMinus(z, w[n])[n] + 1.0)});
    }
    for (const Vec& z : boxLattice(dom, perAxis)) {
        rep.tangentialAtZero = std::max({rep.tangentialAtZero, hb.gammaPlus(z, 0.0).head(n).cwiseAbs().maxCoeff(),
                                         hb.gammaMinus(z, 0.0).head(n).cwiseAbs().maxCoeff()});
        rep.betaAtZero = std::max({rep.betaAtZero, std::abs(hb.betaPlus(z, 0.0) - p.beta0(z)),
                                   std::abs(hb.betaMinus(z, 0.0) + p.beta0(z))});
    }
    rep.passed = rep.lastComponentError <= 1e-12 && rep.tangentialAtZero <= 1e-12 && rep.betaAtZero <= 1e-12;
    return rep;
}

TransplantReport transplantEllipticity(const ThinProblem& p, const DistortionMap& map,
                                       const std::vector<Vec>& nodes, double threshold) {
    const int n = p.dim();
    const HatOperator hat(p, map);
    TransplantReport rep;
    rep.certificate.threshold = threshold;
    rep.certificate.gridSpec = "transplanted nodes=" + std::to_string(nodes.size());
    bool first = true;
    for (const Vec& z : nodes) {
        const Vec ds = p.sGradient(z);
        RowVec hatDir = RowVec::Zero(n + 1);
        hatDir.head(n) = ds.transpose();
        RowVec direct(n + 1);
        direct.head(n) = ds.transpose();
        direct[n] = -ds.dot(map.gamma(z));
        for (int l = 0; l < p.nLambda(); ++l) {
            for (int m = 0; m < p.nMu(); ++m) {
                const double qHat = quadForm(hatDir, hat.coefficients(l, m, z, 0.0).A);
                const double qDirect = quadForm(direct, p.diffusion(l, m, lift(z, 0.0)));
                rep.maxDiscrepancy = std::max(rep.maxDiscrepancy, std::abs(qHat - qDirect));
                if (first || qHat < rep.certificate.margin) {
                    rep.certificate.margin = qHat;
                    rep.certificate.witness = z;
                    rep.certificate.lambda = l;
                    rep.certificate.mu = m;
                    first = false;
                }
            }
        }
    }
    rep.certificate.normMargin = std::sqrt(std::max(0.0, rep.certificate.margin));
    rep.certificate.passed = !first && rep.certificate.margin > threshold;
    return rep;
}

}  // namespace thinlim
