#pragma once

#include "thinlim/model.hpp"
#include "thinlim/transform.hpp"

#include <array>
#include <functional>
#include <string>

namespace thinlim {

/// A thin problem seen as data on a strip bottom(x, eps) < y < top(x, eps)
/// over a horizontal box. Built either from the original problem or from its
/// pushforward under P, so the barrier code serves both.
struct StripProblem {
    int dim = 0;
    int nLambda = 0;
    int nMu = 0;
    Box domain;
    double epsilon0 = 0.0;
    double r = 0.5;
    /// Largest |g^+-| on the domain; eps * gSup must stay below r.
    double gSup = 1.0;

    std::function<HatCoefficients(int, int, const Vec&, double)> coefficients;
    std::function<Vec(const Vec&, double)> gammaPlus, gammaMinus;
    std::function<double(const Vec&, double)> betaPlus, betaMinus;
    /// Lateral Dirichlet data; empty when the strip has no lateral condition to check.
    std::function<double(const Vec&, double)> betaLateral;
    std::function<double(const Vec&, double)> top, bottom;
    /// Functions of x alone with their derivatives.
    std::function<Jet(const Vec&)> beta0, s, h;

    InfSup<double> evalOperator(const Mat& X, const Vec& p, double u, const Vec& x, double y) const;
};

StripProblem originalStrip(const ThinProblem& p);
/// Pushforward of p under map: coefficients from HatOperator, boundary data
/// from HatBoundary, profiles g_eps^+- and domain Omega-hat.
StripProblem hatStrip(const ThinProblem& p, const DistortionMap& map);

struct BarrierParams {
    double alpha = 2.0;
    double Lambda = 2.0;
    double C_D = 1.0;
    double eps1 = 0.0;
    double r = 0.5;
    /// s is replaced by sScale * (s - sShift).
    double sShift = 0.0;
    double sScale = 1.0;
    /// e^{alpha sup s} for the normalized s.
    double C_alpha = 1.0;
    std::string hExpr = "(g+ + g-)/2";
};

/// Minimum of each of the seven barrier margins plus the lateral check.
struct BarrierMargins {
    std::array<double, 7> m{};
    /// min of psi-upper - beta and beta - psi-lower on lateral nodes (+inf if none).
    double lateral = 0.0;
    /// The reported bound C = max |psi| + 1.
    double C = 0.0;
    int nodes = 0;
    bool passed = false;
    /// Name of the first non-positive margin, empty when passed.
    std::string failing;
};

/// Evaluator of a barrier on (x, y).
using BarrierFn = std::function<Jet(const Vec&, double)>;

struct BarrierPair {
    BarrierFn upper;
    BarrierFn lower;
    BarrierParams params;
    double eps = 0.0;
    BarrierMargins margins;
};

/// Jet of e^{alpha s} for the normalized s.
Jet chiJet(const StripProblem& sp, const BarrierParams& bp, const Vec& x);

/// Flat-strip barriers for a strip with gamma0 = 0. Throws PreconditionViolated
/// if the strip's gamma^+- has nonzero tangential part at y = 0 somewhere on a
/// sample lattice, or eps >= eps1 when eps1 > 0.
BarrierPair buildBarrier(const StripProblem& sp, const BarrierParams& params, double eps);
BarrierPair buildBarrier(const ThinProblem& p, const BarrierParams& params, double eps);

struct VerifyGrid {
    int nx = 33;  // per horizontal axis
    int ny = 9;
};

BarrierMargins verifyBarrier(const StripProblem& sp, const BarrierPair& pair, double eps,
                             const VerifyGrid& grid = {}, int threads = 1);

struct SearchOptions {
    std::vector<VerifyGrid> grids{{33, 9}, {65, 17}};
    int threads = 1;
    int budget = 40;  // doublings per parameter
};

/// Parameter search: normalize s, then Lambda, then the s-scale, then C_D,
/// then eps1. Throws SearchExhausted naming the inequality that never held.
BarrierParams searchParameters(const StripProblem& sp, const SearchOptions& opt = {});
BarrierParams searchParameters(const ThinProblem& p, const SearchOptions& opt = {});

/// Barriers on the original strip: w o Q with w built on the hatted strip.
/// Verified on the original problem; C_D is doubled while the lateral check fails.
struct GeneralBarrier {
    BarrierParams params;  // parameters of w on the hatted strip
    StripProblem hat;
    StripProblem original;
    BarrierPair pulled;    // psi = w o Q, margins on the original strip
    BarrierPair hatted;    // w, margins on the hatted strip
};

GeneralBarrier generalBarrier(const ThinProblem& p, const DistortionMap& map, double eps,
                              const SearchOptions& opt = {});
/// Same with parameters already found on the hatted strip (eps <= 0 means eps1 / 2).
GeneralBarrier pullBackBarrier(const ThinProblem& p, const DistortionMap& map, const BarrierParams& params,
                               double eps, const SearchOptions& opt = {});

/// Barriers for one problem at any eps below eps1: flat-strip barriers when
/// gamma0 = 0, pulled-back ones otherwise. Parameters are searched once.
struct BarrierFamily {
    ThinProblem problem;
    bool distorted = false;
    DistortionMap map;
    BarrierParams params;
    SearchOptions options;

    /// Pair on the original strip with margins from the finest search grid.
    BarrierPair at(double eps) const;
};

BarrierFamily findBarriers(const ThinProblem& p, const SearchOptions& opt = {});

/// Jet of w o Q at (x, y) from the jet of w at Q(x, y).
Jet pullback(const DistortionMap& map, const BarrierFn& w, const Vec& x, double y);

struct ChainRuleReport {
    int samples = 0;
    double maxDiscrepancy = 0.0;
    /// Largest |F| seen, for scale.
    double magnitude = 0.0;
};

/// F(D^2 psi, D psi, psi, (x, y)) against F-hat(D^2 w, D w, w, Q(x, y)) for both
/// barriers at random interior points of the original strip.
ChainRuleReport chainRuleCheck(const GeneralBarrier& gb, const DistortionMap& map, const ThinProblem& p,
                               double eps, int samples, unsigned long seed = 1);

}  // namespace thinlim
