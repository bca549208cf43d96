#pragma once

#include "thinlim/model.hpp"

#include <string>
#include <vector>

namespace thinlim {

/// Per-node value of the certified quadratic form (minimized over controls).
struct NodeMargin {
    Vec x;
    double value = 0.0;
    int lambda = 0;
    int mu = 0;
};

struct CertificateReport {
    double margin = 0.0;
    /// Minimum of |w sigma^T| (equivalently sqrt of the quadratic form); boundary form only.
    double normMargin = 0.0;
    Vec witness;
    int lambda = 0;
    int mu = 0;
    bool passed = false;
    double threshold = 1e-8;
    std::string gridSpec;
    std::vector<NodeMargin> nodes;
};

struct BoundaryNode {
    Vec x;
    Vec normal;
};

/// Lattice nodes on the faces of a box with outward normals. Corner and edge
/// nodes carry the normalized sum of the adjacent face normals.
std::vector<BoundaryNode> boxBoundary(const Box& box, int perAxis);

/// min over nodes and controls of v A(x,0) v^T with v = (Ds, -Ds . gamma0).
CertificateReport interiorCertificate(const ThinProblem& p, const std::vector<Vec>& nodes,
                                      double threshold = 1e-8, int threads = 1);

/// min over boundary nodes and controls of w A(x,0) w^T with w = (nu, -nu . gamma0).
CertificateReport boundaryCertificate(const ThinProblem& p, const std::vector<BoundaryNode>& nodes,
                                      double threshold = 1e-8, int threads = 1);

struct EquivalenceReport {
    double maxDiscrepancy = 0.0;
    int comparisons = 0;
    bool passed = false;
};

/// Compares |v sigma^T|^2 against v A v^T for both certificate vectors at
/// every node and control.
EquivalenceReport equivalenceCheck(const ThinProblem& p, const std::vector<Vec>& nodes,
                                   const std::vector<BoundaryNode>& boundary, double tol = 1e-10);

/// Smooth cutoff: 1 on [0, 1/2], 0 on [1, inf), built from exp(-1/t).
double cutoff(double r);

/// R(theta) diag(cutoff(|x|), 1) R(theta)^T with theta the polar angle of x.
Mat2 rotatingField(const Vec2& x);

struct ObstructionCase {
    std::string candidate;
    double thetaMin = 0.0;
    double minValue = 0.0;
    double maxValue = 0.0;
    double ratio = 0.0;
    bool obstructed = false;
};

struct ObstructionReport {
    std::vector<ObstructionCase> cases;
    int nTheta = 0;
    bool passed = false;  // every candidate obstructed
};

/// Sweep the unit circle at theta_j = 2 pi (j + 1/2) / nTheta and record the
/// min and max of Ds A Ds^T for each candidate potential (functions of x1, x2).
ObstructionReport circleObstructionDemo(const std::vector<ScalarFunction>& candidates, int nTheta,
                                        double ratioBound = 1e-3);

/// The default candidate list: two linears, one sum, two quadratics.
std::vector<ScalarFunction> defaultObstructionCandidates();

}  // namespace thinlim
