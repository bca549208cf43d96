#pragma once

#include "thinlim/ellipticity.hpp"
#include "thinlim/model.hpp"

#include <vector>

namespace thinlim {

/// P(z, y) = (z + y gamma(z), y) on R^N x [-r, r] and its inverse.
class DistortionMap {
public:
    DistortionMap() = default;
    DistortionMap(VectorFunction gamma, double r, double tolFixedPoint = 1e-14, int maxIter = 200);

    /// Map built from gamma0 with the largest admissible r in {1/2, 1/4, ...}.
    static DistortionMap fromProblem(const ThinProblem& p);
    /// Largest r in {1/2, 1/4, ...} with r sup|Dgamma| <= 1/2 and
    /// r |Dg+-| |gamma| <= 1/2 on the sampled region.
    static double selectRadius(const ThinProblem& p, int perAxis = 17);

    int dim() const { return static_cast<int>(gamma_.size()); }
    double r() const { return r_; }
    bool affine() const;

    Vec gamma(const Vec& z) const;
    /// Entries d_j gamma_i.
    Mat gammaJacobian(const Vec& z) const;
    double gammaSup(const Box& region, int perAxis = 17) const;

    Vec forward(const Vec& z, double y) const;
    /// Solves z + y gamma(z) = x by the iteration z <- x - y gamma(z) from z = x.
    Vec inverse(const Vec& x, double y) const;

    /// DP(z,y)^{-1} = DQ(P(z,y)).
    Mat matrixR(const Vec& z, double y) const;
    /// DQ at (x, y).
    Mat jacobianQ(const Vec& x, double y) const;

    /// Hessians of Q_1..Q_{N+1} at (x, y); the last one is zero.
    std::vector<Mat> hessianQFiniteDifference(const Vec& x, double y, double step = 1e-4) const;
    /// Same quantity from differentiating DQ = R(Q, y) once more.
    std::vector<Mat> hessianQImplicit(const Vec& x, double y) const;
    /// Implicit formula when gamma is affine (exact), finite differences otherwise.
    std::vector<Mat> hessianQ(const Vec& x, double y) const;

    /// The y in [-r, r] solving y = eps g(z + y gamma(z)), by bisection.
    double profile(const ScalarFunction& g, double eps, const Vec& z) const;

    /// Omega inflated by r sup|gamma| per axis.
    Box hatDomain(const Box& omega) const;

private:
    VectorFunction gamma_;
    double r_ = 0.5;
    double tol_ = 1e-14;
    int maxIter_ = 200;
};

/// Coefficients of the pushed-forward operator at (z, y).
struct HatCoefficients {
    Mat sigma;  // k x (N+1)
    Mat A;
    Vec b;
    double c = 0.0;
    double f = 0.0;
};

class HatOperator {
public:
    HatOperator(ThinProblem p, DistortionMap map) : p_(std::move(p)), map_(std::move(map)) {}

    const ThinProblem& problem() const { return p_; }
    const DistortionMap& map() const { return map_; }

    /// sigma P R^T, (b P) R^T + d P, c P, f P with d_i = tr(A D^2 Q_i).
    HatCoefficients coefficients(int l, int m, const Vec& z, double y) const;
    /// d at the original point (x, y).
    Vec curvatureDrift(int l, int m, const Vec& x, double y) const;
    InfSup<double> evalOperator(const Mat& X, const Vec& p, double r, const Vec& z, double y) const;

private:
    ThinProblem p_;
    DistortionMap map_;
};

HatOperator pushforward(const ThinProblem& p, const DistortionMap& map);

/// gamma-hat = R gamma(P), beta-hat = beta(P) on top and bottom.
class HatBoundary {
public:
    HatBoundary(ThinProblem p, DistortionMap map) : p_(std::move(p)), map_(std::move(map)) {}
    Vec gammaPlus(const Vec& z, double y) const;
    Vec gammaMinus(const Vec& z, double y) const;
    double betaPlus(const Vec& z, double y) const;
    double betaMinus(const Vec& z, double y) const;

private:
    ThinProblem p_;
    DistortionMap map_;
};

struct HatBoundaryReport {
    /// max | last component of gamma-hat -+ 1 | over samples.
    double lastComponentError = 0.0;
    /// max | first N components of gamma-hat | at y = 0.
    double tangentialAtZero = 0.0;
    /// max | beta-hat(z, 0) -+ beta0(z) |.
    double betaAtZero = 0.0;
    bool passed = false;
};

HatBoundary hatBoundary(const ThinProblem& p, const DistortionMap& map);
HatBoundaryReport checkHatBoundary(const ThinProblem& p, const DistortionMap& map, int perAxis = 9);

struct TransplantReport {
    CertificateReport certificate;
    double maxDiscrepancy = 0.0;
};

/// min of (Ds, 0) A-hat(z, 0) (Ds, 0)^T, cross-checked against
/// (Ds, -Ds.gamma) A(z, 0) (Ds, -Ds.gamma)^T at every node and control.
TransplantReport transplantEllipticity(const ThinProblem& p, const DistortionMap& map,
                                       const std::vector<Vec>& nodes, double threshold = 1e-8);

}  // namespace thinlim
