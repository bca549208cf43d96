#include "thinlim/ellipticity.hpp"

#include "thinlim/parallel.hpp"

#include <cmath>

namespace thinlim {

std::vector<BoundaryNode> boxBoundary(const Box& box, int perAxis) {
    std::vector<BoundaryNode> out;
    const double tol = 1e-12;
    for (const Vec& x : boxLattice(box, perAxis)) {
        Vec normal = Vec::Zero(box.dim());
        for (int i = 0; i < box.dim(); ++i) {
            const double scale = std::max(1.0, box.upper[i] - box.lower[i]);
            if (std::abs(x[i] - box.lower[i]) <= tol * scale) normal[i] -= 1.0;
            if (std::abs(x[i] - box.upper[i]) <= tol * scale) normal[i] += 1.0;
        }
        if (normal.norm() == 0.0) continue;
        out.push_back({x, normal.normalized()});
    }
    return out;
}

namespace {

/// Row vector (v, -v . gamma0).
RowVec liftDirection(const Vec& v, const Vec& gamma0) {
    RowVec w(v.size() + 1);
    w.head(v.size()) = v.transpose();
    w[v.size()] = -v.dot(gamma0);
    return w;
}

template <typename Direction>
CertificateReport certify(const ThinProblem& p, const std::vector<Vec>& xs, Direction&& direction,
                          double threshold, int threads, const std::string& spec) {
    CertificateReport rep;
    rep.threshold = threshold;
    rep.gridSpec = spec;
    rep.nodes.resize(xs.size());
    auto score = [&](std::size_t i) {
        const Vec& x = xs[i];
        const Vec z = lift(x, 0.0);
        const RowVec w = liftDirection(direction(i), p.gamma0(x));
        NodeMargin nm;
        nm.x = x;
        bool first = true;
        for (int l = 0; l < p.nLambda(); ++l) {
            for (int m = 0; m < p.nMu(); ++m) {
                const double q = quadForm(w, p.diffusion(l, m, z));
                if (first || q < nm.value) {
                    nm.value = q;
                    nm.lambda = l;
                    nm.mu = m;
                    first = false;
                }
            }
        }
        rep.nodes[i] = nm;
        return nm.value;
    };
    const auto [value, index] = parallelArgMin(xs.size(), threads, score);
    if (index < xs.size()) {
        rep.margin = value;
        rep.witness = rep.nodes[index].x;
        rep.lambda = rep.nodes[index].lambda;
        rep.mu = rep.nodes[index].mu;
    }
    rep.normMargin = std::sqrt(std::max(0.0, rep.margin));
    rep.passed = index < xs.size() && rep.margin > threshold;
    return rep;
}

}  // namespace

CertificateReport interiorCertificate(const ThinProblem& p, const std::vector<Vec>& nodes,
                                      double threshold, int threads) {
    return certify(
        p, nodes, [&](std::size_t i) { return p.sGradient(nodes[i]); }, threshold, threads,
        "interior nodes=" + std::to_string(nodes.size()));
}

CertificateReport boundaryCertificate(const ThinProblem& p, const std::vector<BoundaryNode>& nodes,
                                      double threshold, int threads) {
    std::vector<Vec> xs;
    xs.reserve(nodes.size());
    for (const auto& b : nodes) xs.push_back(b.x);
    CertificateReport rep = certify(
        p, xs, [&](std::size_t i) { return nodes[i].normal; }, threshold, threads,
        "boundary nodes=" + std::to_string(nodes.size()));
    // Norm form |w sigma^T| evaluated directly from sigma.
    double normMin = 0.0;
    bool first = true;
    for (const auto& b : nodes) {
        const Vec z = lift(b.x, 0.0);
        const RowVec w = liftDirection(b.normal, p.gamma0(b.x));
        for (int l = 0; l < p.nLambda(); ++l)
            for (int m = 0; m < p.nMu(); ++m) {
                const double v = (w * p.sigma(l, m, z).transpose()).norm();
                if (first || v < normMin) normMin = v;
                first = false;
            }
    }
    rep.normMargin = normMin;
    return rep;
}

EquivalenceReport equivalenceCheck(const ThinProblem& p, const std::vector<Vec>& nodes,
                                   const std::vector<BoundaryNode>& boundary, double tol) {
    EquivalenceReport rep;
    auto compare = [&](const Vec& x, const Vec& v) {
        const Vec z = lift(x, 0.0);
        const RowVec w = liftDirection(v, p.gamma0(x));
        for (int l = 0; l < p.nLambda(); ++l)
            for (int m = 0; m < p.nMu(); ++m) {
                const Mat s = p.sigma(l, m, z);
                const double lhs = (w * s.transpose()).squaredNorm();
                const double rhs = quadForm(w, diffusionOf(s));
                rep.maxDiscrepancy = std::max(rep.maxDiscrepancy, std::abs(lhs - rhs));
                ++rep.comparisons;
            }
    };
    for (const auto& x : nodes) compare(x, p.sGradient(x));
    for (const auto& b : boundary) compare(b.x, b.normal);
    rep.passed = rep.maxDiscrepancy <= tol;
    return rep;
}

double cutoff(double r) {
    auto phi = [](double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; };
    const double a = phi(1.0 - r);
    const double b = phi(r - 0.5);
    return a / (a + b);
}

Mat2 rotatingField(const Vec2& x) {
    const double r = x.norm();
    if (r < 1e-12) return Vec2(cutoff(0.0), 1.0).asDiagonal();
    const double theta = std::atan2(x[1], x[0]);
    Mat2 rot;
    rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    Mat2 a = rot * Vec2(cutoff(r), 1.0).asDiagonal() * rot.transpose();
    return (a + a.transpose()) / 2;
}

ObstructionReport circleObstructionDemo(const std::vector<ScalarFunction>& candidates, int nTheta,
                                        double ratioBound) {
    if (nTheta < 64) throw PreconditionViolated("circle sweep needs at least 64 angles");
    ObstructionReport rep;
    rep.nTheta = nTheta;
    rep.passed = true;
    for (const auto& s : candidates) {
        ObstructionCase c;
        c.candidate = s.describe();
        bool first = true;
        for (int j = 0; j < nTheta; ++j) {
            const double theta = 2.0 * M_PI * (j + 0.5) / nTheta;
            const Vec2 x(std::cos(theta), std::sin(theta));
            const Vec point = lift(x, 0.0);
            const Vec2 ds = s.gradient(point, 2);
            const double q = ds.dot(rotatingField(x) * ds);
            if (first || q < c.minValue) {
                c.minValue = q;
                c.thetaMin = theta;
            }
            if (first || q > c.maxValue) c.maxValue = q;
            first = false;
        }
        c.ratio = c.maxValue > 0 ? c.minValue / c.maxValue : 0.0;
        c.obstructed = c.ratio <= ratioBound;
        rep.passed = rep.passed && c.obstructed;
        rep.cases.push_back(c);
    }
    return rep;
}

std::vector<ScalarFunction> defaultObstructionCandidates() {
    return {ScalarFunction::parse("x1", 2), ScalarFunction::parse("x2", 2),
            ScalarFunction::parse("x1 + x2", 2), ScalarFunction::parse("x1*x1 + 2*x2*x2", 2),
            ScalarFunction::parse("x1*x2", 2)};
}

}  // namespace thinlim
