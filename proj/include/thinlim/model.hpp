#pragma once

#include "thinlim/expr.hpp"
#include "thinlim/linalg.hpp"
#include "thinlim/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace thinlim {

struct ControlSet {
    std::vector<std::string> lambdas;
    std::vector<std::string> mus;
};

/// Coefficients of one control pair. sigma is k x (N+1), b has N+1 entries.
struct ControlCoefficients {
    std::vector<VectorFunction> sigma;
    VectorFunction b;
    ScalarFunction c;
    ScalarFunction f;
};

struct CoefficientFamily {
    int k = 0;
    /// Indexed by lambda * |M| + mu.
    std::vector<ControlCoefficients> entries;
    /// Declared bound on sampled sup-norms; non-positive disables the check.
    double boundCF = 0.0;
};

struct GeometrySpec {
    int dim = 1;
    Box omega;
    ScalarFunction gMinus;
    ScalarFunction gPlus;
    double epsilon0 = 0.5;
};

/// Boundary data. gamma^+- and beta^+- are synthesized from gamma0, k^+-, beta0,
/// l^+- unless raw fields are supplied.
struct BoundaryData {
    VectorFunction gamma0;
    ScalarFunction beta0;
    VectorFunction kPlus;
    VectorFunction kMinus;
    ScalarFunction lPlus;
    ScalarFunction lMinus;
    ScalarFunction betaLateral;
    ScalarFunction s;
    std::optional<ScalarFunction> h;

    std::optional<VectorFunction> gammaPlusRaw;
    std::optional<VectorFunction> gammaMinusRaw;
    std::optional<ScalarFunction> betaPlusRaw;
    std::optional<ScalarFunction> betaMinusRaw;
};

/// Full thin-domain problem. Immutable after construction; all evaluators are
/// pure. Points z = (x, y) have N+1 entries; functions of x alone take N.
class ThinProblem {
public:
    ThinProblem() = default;
    ThinProblem(ControlSet controls, CoefficientFamily coeffs, GeometrySpec geom, BoundaryData bdata);

    int dim() const { return geom_.dim; }
    int nLambda() const { return static_cast<int>(controls_.lambdas.size()); }
    int nMu() const { return static_cast<int>(controls_.mus.size()); }
    int k() const { return coeffs_.k; }

    const ControlSet& controls() const { return controls_; }
    const CoefficientFamily& family() const { return coeffs_; }
    const GeometrySpec& geometry() const { return geom_; }
    const BoundaryData& boundary() const { return bdata_; }
    const Box& omega() const { return geom_.omega; }
    double epsilon0() const { return geom_.epsilon0; }

    const ControlCoefficients& coefficients(int l, int m) const;
    Mat sigma(int l, int m, const Vec& z) const;
    Mat diffusion(int l, int m, const Vec& z) const;
    Vec drift(int l, int m, const Vec& z) const;
    double reaction(int l, int m, const Vec& z) const;
    double source(int l, int m, const Vec& z) const;

    double gPlus(const Vec& x) const;
    double gMinus(const Vec& x) const;
    Vec gPlusGradient(const Vec& x) const;
    Vec gMinusGradient(const Vec& x) const;
    /// h defaults to the midpoint (g^+ + g^-)/2.
    double h(const Vec& x) const;
    Vec hGradient(const Vec& x) const;
    Mat hHessian(const Vec& x) const;

    Vec gamma0(const Vec& x) const;
    /// Jacobian with entries d_j gamma0_i.
    Mat gamma0Jacobian(const Vec& x) const;
    /// Second derivatives: entry [i] is the Hessian of gamma0_i.
    std::vector<Mat> gamma0Hessians(const Vec& x) const;
    double beta0(const Vec& x) const;
    Vec beta0Gradient(const Vec& x) const;
    Mat beta0Hessian(const Vec& x) const;
    Vec kPlus(const Vec& x) const;
    Vec kMinus(const Vec& x) const;
    double lPlus(const Vec& x) const;
    double lMinus(const Vec& x) const;

    double s(const Vec& x) const;
    Vec sGradient(const Vec& x) const;
    Mat sHessian(const Vec& x) const;

    /// gamma^+(x,y), an (N+1)-vector whose last entry is +1 when synthesized.
    Vec gammaPlus(const Vec& z) const;
    Vec gammaMinus(const Vec& z) const;
    double betaPlus(const Vec& z) const;
    double betaMinus(const Vec& z) const;
    double betaLateral(const Vec& z) const;

    bool hasRawBoundary() const;
    /// True when every gamma0 component is the constant zero expression.
    bool gamma0IsZero() const;
    bool gamma0IsAffine() const;

    /// Copy with a replacement for gamma0 (used to build distorted variants).
    ThinProblem withGamma0(VectorFunction gamma0) const;
    ThinProblem withS(ScalarFunction s) const;
    ThinProblem withCoefficients(CoefficientFamily coeffs) const;
    ThinProblem withBoundary(BoundaryData bdata) const;

private:
    ControlSet controls_;
    CoefficientFamily coeffs_;
    GeometrySpec geom_;
    BoundaryData bdata_;
};

struct AssumptionCheck {
    std::string name;
    std::string failure;  // e.g. "NonNegativityViolated", set when !passed
    bool passed = true;
    double worst = 0.0;   // worst sampled value of the checked quantity
    Vec witness;          // point attaining `worst`
    int lambda = -1;
    int mu = -1;
    std::string detail;
};

struct DiagnosticsReport {
    std::vector<AssumptionCheck> checks;
    bool passed = true;
    const AssumptionCheck* find(const std::string& name) const;
};

/// Sample every checkable standing assumption on a uniform lattice of
/// Omega x [-1, 1] with `samplesPerAxis` nodes per axis. Never throws on a
/// violated assumption; violations are listed in the report.
DiagnosticsReport validate(const ThinProblem& p, int samplesPerAxis = 9);

/// inf over lambda, sup over mu of -tr(A X) - b.p + c r - f at z.
InfSup<double> evalOperatorF(const ThinProblem& p, const Mat& X, const Vec& pvec, double r,
                             const Vec& z);

/// Uniform lattice on a box with `perAxis` nodes per axis, first axis fastest.
std::vector<Vec> boxLattice(const Box& box, int perAxis);
std::vector<Vec> boxLattice(const Box& box, const std::vector<int>& perAxis);

}  // namespace thinlim
