#pragma once

#include "thinlim/config.hpp"
#include "thinlim/model.hpp"
#include "thinlim/reduction.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <utility>
#include <vector>

namespace thinlim {

enum class NodeKind : unsigned char { Interior, Top, Bottom, Lateral };

const char* nodeKindName(NodeKind k);

/// Uniform tensor grid, first axis fastest.
struct Grid {
    std::vector<int> count;
    Vec origin;
    Vec spacing;
    std::vector<NodeKind> kind;
    /// For strip grids: the physical top and bottom, which sit half a cell
    /// inside the outermost node layers.
    bool strip = false;
    double yLower = 0.0;
    double yUpper = 0.0;

    int axes() const { return static_cast<int>(count.size()); }
    int size() const { return static_cast<int>(kind.size()); }
    std::vector<int> multi(int idx) const;
    int index(const std::vector<int>& m) const;
    Vec point(int idx) const;
    /// Neighbor offset by `step` along `axis`, or -1 outside the grid.
    int neighbor(int idx, int axis, int step) const;
    /// Node whose y lies in [yLower, yUpper] (always true off strip grids).
    bool insideStrip(int idx) const;
};

/// nx nodes per axis on the closed box; boundary nodes are Lateral.
Grid limitGrid(const Box& omega, int nx);
/// Omega x (yLower, yUpper) with nx nodes per horizontal axis and ny levels in y.
/// Levels 0 and ny-1 are the Bottom and Top layers half a cell outside the
/// strip, so the one-sided boundary difference is centred on the boundary.
Grid epsGrid(const Box& omega, double yLower, double yUpper, int nx, int ny);

using SparseRow = std::vector<std::pair<int, double>>;  // (node, coefficient)

/// Monotone stencil of -tr(A D^2 u) - b.Du + c u at an interior node,
/// diagonal included, over grid node indices.
SparseRow interiorStencil(const Grid& g, int idx, const Mat& A, const Vec& b, double c);

struct DiscreteSystem {
    Grid grid;
    int nLambda = 1;
    int nMu = 1;
    std::vector<int> unknownOf;  // node -> unknown or -1
    std::vector<int> nodeOf;     // unknown -> node
    Vec fixed;                   // node values of eliminated Dirichlet nodes
    /// Per control l * nMu + m: row-compressed operator on unknowns and right-hand side.
    std::vector<Eigen::SparseMatrix<double, Eigen::RowMajor>> ops;
    std::vector<Vec> rhs;
    /// 1 where the row depends on the controls.
    std::vector<char> controlled;

    int unknowns() const { return static_cast<int>(nodeOf.size()); }
};

struct EpsOptions {
    /// Replace the oblique rows by Dirichlet rows with the lateral data.
    bool dirichletTopBottom = false;
    int threads = 1;
};

/// Flat strips only: g+- must be constant.
DiscreteSystem discretizeEps(const ThinProblem& p, double eps, const Grid& grid, const EpsOptions& opt = {});
DiscreteSystem discretizeLimit(const LimitProblem& lp, const Grid& grid, int threads = 1);

struct PolicyOptions {
    double tol = 1e-10;
    int maxIter = 100;
    bool gaussSeidel = false;
};

struct GridField {
    Grid grid;
    Vec values;                  // one per node
    std::vector<int> lambda;     // active control per node, -1 where none
    std::vector<int> mu;
    double residual = 0.0;       // max |F_h(u)|
    double scaledResidual = 0.0; // max |F_h(u)| / diagonal, in units of u
    int iterations = 0;          // linear solves
    int policySwitches = 0;      // rows whose policy changed, summed over iterations
    std::vector<double> residualHistory;
};

/// F_h(u) per unknown and the minimizing-maximizing control pair.
Vec discreteOperator(const DiscreteSystem& sys, const Vec& u, std::vector<int>* lambda = nullptr,
                     std::vector<int>* mu = nullptr);

/// Howard iteration on the joint (lambda, mu) policy.
GridField policyIteration(const DiscreteSystem& sys, const PolicyOptions& opt = {});

/// Rows of the frozen-policy matrix that cannot reach a strictly dominant row;
/// empty when the matrix is weakly chained diagonally dominant.
std::vector<int> unchainedRows(const Eigen::SparseMatrix<double, Eigen::RowMajor>& m);

GridField solveEps(const ThinProblem& p, double eps, const SolverSettings& s, int threads = 1);
GridField solveLimit(const LimitProblem& lp, const SolverSettings& s, int threads = 1);

/// Linear interpolation of a 1D limit field, or multilinear in N dimensions.
double interpolate(const GridField& u0, const Vec& x);

struct PerturbationReport {
    double alpha = 0.0;
    double sShift = 0.0;
    double sScale = 1.0;
    /// max over interior nodes and controls of the discrete G0(D^2 psi, D psi, 0, x).
    double maxG0 = 0.0;
    Vec witness;
    int nodes = 0;
    bool passed = false;
};

/// psi = e^{alpha s} with s normalized so Ds A Ds^T >= 1 on the grid; alpha
/// doubles from 2 until the discrete G0 is <= -1/2 at every interior node.
PerturbationReport comparisonPerturbation(const LimitProblem& lp, const std::function<Jet(const Vec&)>& s,
                                          int nx, int budget = 40);

}  // namespace thinlim
