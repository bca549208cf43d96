#pragma once

#include "thinlim/model.hpp"

#include <string>
#include <vector>

namespace thinlim {

struct SolverSettings {
    int nx = 65;
    int ny = 17;
    double tol = 1e-10;
    int maxIter = 100;
    bool gaussSeidel = false;
};

struct ExperimentSettings {
    std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
    /// Horizontal resolution shared by every eps-solve and the limit solve.
    int nx = 65;
    /// Vertical node counts, one per eps or a single value for all.
    std::vector<int> ny{17};
    unsigned long seed = 1;
};

struct ProblemConfig {
    ThinProblem problem;
    SolverSettings solver;
    ExperimentSettings experiment;
};

/// Parse the INI problem description documented in docs/config.md.
ProblemConfig parseConfig(const std::string& text);
ProblemConfig loadConfig(const std::string& path);

}  // namespace thinlim
