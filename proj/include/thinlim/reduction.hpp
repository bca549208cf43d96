#pragma once

#include "thinlim/model.hpp"

#include <functional>

namespace thinlim {

/// Reduced coefficients of one control pair at one point of Omega.
struct LimitCoefficients {
    Mat A;      // N x N
    Vec b;      // N
    double c = 0.0;
    double f = 0.0;
    Mat sigma;  // k x N
};

/// The N-dimensional Dirichlet problem obtained in the thin limit.
class LimitProblem {
public:
    using CoefficientFn = std::function<LimitCoefficients(int, int, const Vec&)>;
    using TraceFn = std::function<double(const Vec&)>;

    LimitProblem() = default;
    LimitProblem(int dim, Box domain, int nLambda, int nMu, CoefficientFn coefficients, TraceFn dirichlet);

    int dim() const { return dim_; }
    const Box& domain() const { return domain_; }
    int nLambda() const { return nLambda_; }
    int nMu() const { return nMu_; }

    LimitCoefficients coefficients(int l, int m, const Vec& x) const { return coeff_(l, m, x); }
    /// Dirichlet trace beta(x, 0).
    double dirichlet(const Vec& x) const { return trace_(x); }

private:
    int dim_ = 0;
    Box domain_;
    int nLambda_ = 0;
    int nMu_ = 0;
    CoefficientFn coeff_;
    TraceFn trace_;
};

/// b(x) = gamma0 Dgamma0^T - (g+ k+ + g- k-)/(g+ - g-), entry j being
/// sum_i gamma0_i d_i gamma0_j minus the averaged k term.
Vec auxDrift(const ThinProblem& p, const Vec& x);
/// c(x) = -gamma0 . Dbeta0 + (g+ l+ + g- l-)/(g+ - g-).
double auxSource(const ThinProblem& p, const Vec& x);

/// Build the limit problem. Throws DegenerateThickness if g+ - g- < 1e-12
/// on the check lattice or at any later evaluation point.
LimitProblem reduce(const ThinProblem& p, int checkPerAxis = 33);

/// inf over lambda, sup over mu of -tr(A X) - b.p + c r - f.
InfSup<double> evalOperatorG(const LimitProblem& lp, const Mat& X, const Vec& pvec, double r,
                             const Vec& x);

/// Homogeneous part of one control: -tr(A X) - b.p + c r.
double evalHomogeneous(const LimitCoefficients& c, const Mat& X, const Vec& pvec, double r);

/// Matrices B and C of the representation identity; both (N+1) x (N+1).
Mat representationB(const ThinProblem& p, const Vec& x, const Vec& pvec);
Mat representationC(const ThinProblem& p, const Vec& x);

struct RepresentationReport {
    int samples = 0;
    double maxDiscrepancy = 0.0;
    Vec worstX;
};

/// Random (X, p, r, x) draws: G(X,p,r,x) against
/// F(J^T X J + B + C, (p, beta0 - gamma0.p), r, (x, 0)).
RepresentationReport representationCheck(const ThinProblem& p, const LimitProblem& lp, int samples,
                                         unsigned long seed = 1);

struct SubadditivityReport {
    int samples = 0;
    /// max of G(1) - G(2) - sup G0(1 - 2); non-positive when the property holds.
    double maxExcess = 0.0;
};

SubadditivityReport subadditivityCheck(const LimitProblem& lp, int samples, unsigned long seed = 1);

struct BoundsReport {
    double supBound = 0.0;        // max |sigma|, |b|, |c|, |f| sampled
    double lipschitzBound = 0.0;  // max sampled difference quotient of sigma and b
    double constant = 0.0;        // max of the two
    int nodes = 0;
};

BoundsReport estimateBounds(const LimitProblem& lp, int perAxis = 17);

}  // namespace thinlim
