#pragma once

#include "thinlim/barriers.hpp"
#include "thinlim/config.hpp"
#include "thinlim/solver.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace thinlim {

struct ExperimentPlan {
    ThinProblem problem;
    std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
    int nx = 33;
    /// Vertical levels per eps; a single entry applies to all.
    std::vector<int> ny{17};
    SolverSettings solver;
    int threads = 1;
    /// Check the barrier sandwich at every eps (needs a successful search).
    bool sandwich = true;
    SearchOptions search;
};

struct ConvergenceRow {
    double eps = 0.0;
    /// max over strip nodes of |u_eps - I[u0]|
    double error = 0.0;
    double residual = 0.0;
    double scaledResidual = 0.0;
    int iterations = 0;
    int nodes = 0;
    /// min over strip nodes of min(upper - u, u - lower); NaN without barriers.
    double sandwichMargin = 0.0;
    /// max upper - min lower over strip nodes.
    double sandwichWidth = 0.0;
    double seconds = 0.0;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    double limitResidual = 0.0;
    /// max |u0(nx) - u0(2 nx - 1)| on the coarse nodes.
    double discretizationError = 0.0;
    double limitSeconds = 0.0;
    std::optional<BarrierParams> barrier;
    bool hasVerdict = false;
    bool decreasing = false;
    bool withinBand = false;
    /// Every E(eps) at or below the discretization error (u0 exact on the strip).
    bool belowFloor = false;
    bool sandwichHolds = true;
    bool verdict = false;
};

/// Throws PreconditionViolated if the eps list is not strictly decreasing or
/// an eps is not below eps1.
ConvergenceTable convergenceExperiment(const ExperimentPlan& plan);

/// eps, error, residuals, sandwich columns; deterministic.
std::string convergenceCsv(const ConvergenceTable& t);
/// Runtimes, kept apart so the main table is reproducible byte for byte.
std::string timingCsv(const ConvergenceTable& t);
std::string formatConvergence(const ConvergenceTable& t);

enum class Manufactured { Diffusion, Drift, Linear };

struct RateReport {
    std::string name;
    std::vector<int> nx;
    std::vector<double> errors;
    double rate = 0.0;
    bool passed = false;
    std::string criterion;
};

/// Limit-problem solves on (0, 1) with nx cells against a known u*: sin(pi x)
/// for Diffusion (rate >= 1.7) and Drift (b = 1, rate in [0.9, 2.1]), u* = x for
/// Linear (error <= 1e-12 at every nx).
RateReport manufacturedSolutionTest(Manufactured kind, const std::vector<int>& nxList = {32, 64, 128, 256});

struct PipelineOptions {
    std::string outDir = "out";
    unsigned long seed = 1;
    int threads = 1;
};

struct PipelineResult {
    int exitCode = 0;
    std::string stage;
    std::string message;
};

/// validate, certify, reduce, transform (gamma0 != 0), barrier, solve, converge.
/// Exit codes: 0 ok, 2 validate, 3 certify, 4 barrier, 5 solver, 1 otherwise.
PipelineResult runPipeline(const ProblemConfig& cfg, const PipelineOptions& opt, std::ostream& log);

}  // namespace thinlim
