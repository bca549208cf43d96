#include "thinlim/solver.hpp"

#include "thinlim/parallel.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace thinlim {

const char* nodeKindName(NodeKind k) {
    switch (k) {
        case NodeKind::Interior: return "interior";
        case NodeKind::Top: return "top";
        case NodeKind::Bottom: return "bottom";
        case NodeKind::Lateral: return "lateral";
    }
    return "?";
}

std::vector<int> Grid::multi(int idx) const {
    std::vector<int> m(count.size());
    for (std::size_t a = 0; a < count.size(); ++a) {
        m[a] = idx % count[a];
        idx /= count[a];
    }
    return m;
}

int Grid::index(const std::vector<int>& m) const {
    int idx = 0;
    for (int a = axes() - 1; a >= 0; --a) idx = idx * count[a] + m[a];
    return idx;
}

Vec Grid::point(int idx) const {
    Vec p(axes());
    const auto m = multi(idx);
    for (int a = 0; a < axes(); ++a) p[a] = origin[a] + m[a] * spacing[a];
    return p;
}

int Grid::neighbor(int idx, int axis, int step) const {
    if (idx < 0) return -1;
    auto m = multi(idx);
    m[axis] += step;
    if (m[axis] < 0 || m[axis] >= count[axis]) return -1;
    return index(m);
}

bool Grid::insideStrip(int idx) const {
    if (!strip) return true;
    const double y = point(idx)[axes() - 1];
    const double tol = 1e-12 * std::max(1.0, std::abs(yUpper - yLower));
    return y >= yLower - tol && y <= yUpper + tol;
}

namespace {

int totalSize(const std::vector<int>& count) {
    int n = 1;
    for (int c : count) n *= c;
    return n;
}

}  // namespace

Grid limitGrid(const Box& omega, int nx) {
    if (nx < 3) throw PreconditionViolated("limit grid needs at least 3 nodes per axis");
    Grid g;
    const int n = omega.dim();
    g.count.assign(n, nx);
    g.origin = omega.lower;
    g.spacing = (omega.upper - omega.lower) / (nx - 1);
    g.kind.assign(totalSize(g.count), NodeKind::Interior);
    for (int i = 0; i < g.size(); ++i) {
        const auto m = g.multi(i);
        for (int a = 0; a < n; ++a)
            if (m[a] == 0 || m[a] == nx - 1) g.kind[i] = NodeKind::Lateral;
    }
    return g;
}

Grid epsGrid(const Box& omega, double yLower, double yUpper, int nx, int ny) {
    if (nx < 3 || ny < 4) throw PreconditionViolated("strip grid too small");
    if (!(yUpper > yLower)) throw DegenerateThickness("strip has non-positive thickness");
    Grid g;
    const int n = omega.dim();
    g.count.assign(n, nx);
    g.count.push_back(ny);
    g.origin = lift(omega.lower, 0.0);
    g.spacing = lift((omega.upper - omega.lower) / (nx - 1), (yUpper - yLower) / (ny - 2));
    g.origin[n] = yLower - 0.5 * g.spacing[n];
    g.strip = true;
    g.yLower = yLower;
    g.yUpper = yUpper;
    g.kind.assign(totalSize(g.count), NodeKind::Interior);
    for (int i = 0; i < g.size(); ++i) {
        const auto m = g.multi(i);
        bool lateral = false;
        for (int a = 0; a < n; ++a) lateral = lateral || m[a] == 0 || m[a] == nx - 1;
        if (lateral)
            g.kind[i] = NodeKind::Lateral;
        else if (m[n] == ny - 1)
            g.kind[i] = NodeKind::Top;
        else if (m[n] == 0)
            g.kind[i] = NodeKind::Bottom;
    }
    return g;
}

namespace {

void consolidate(SparseRow& row) {
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    SparseRow out;
    for (const auto& e : row) {
        if (!out.empty() && out.back().first == e.first)
            out.back().second += e.second;
        else
            out.push_back(e);
    }
    row.swap(out);
}

void requireNeighbor(int nb, int idx) {
    if (nb < 0) throw PreconditionViolated("node " + std::to_string(idx) + " lacks a full stencil");
}

}  // namespace

SparseRow interiorStencil(const Grid& g, int idx, const Mat& A, const Vec& b, double c) {
    const int n = g.axes();
    SparseRow row;
    double diag = c;
    auto add = [&](int node, double v) {
        requireNeighbor(node, idx);
        row.emplace_back(node, v);
    };
    for (int i = 0; i < n; ++i) {
        const double h = g.spacing[i];
        const double a = A(i, i);
        diag += 2 * a / (h * h);
        add(g.neighbor(idx, i, 1), -a / (h * h));
        add(g.neighbor(idx, i, -1), -a / (h * h));
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double a = A(i, j);
            if (a == 0.0) continue;
            const double w = std::abs(a) / (g.spacing[i] * g.spacing[j]);
            const int s = a > 0 ? 1 : -1;
            diag -= 2 * w;
            add(g.neighbor(g.neighbor(idx, i, 1), j, s), -w);
            add(g.neighbor(g.neighbor(idx, i, -1), j, -s), -w);
            for (int step : {1, -1}) {
                add(g.neighbor(idx, i, step), w);
                add(g.neighbor(idx, j, step), w);
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        const double h = g.spacing[i];
        if (b[i] > 0) {
            diag += b[i] / h;
            add(g.neighbor(idx, i, 1), -b[i] / h);
        } else if (b[i] < 0) {
            diag -= b[i] / h;
            add(g.neighbor(idx, i, -1), b[i] / h);
        }
    }
    row.emplace_back(idx, diag);
    consolidate(row);
    return row;
}

namespace {

void checkMonotone(const SparseRow& row, int idx, int l, int m) {
    double diag = 0.0, off = 0.0, worst = -std::numeric_limits<double>::infinity();
    for (const auto& [node, v] : row) {
        if (node == idx) {
            diag = v;
        } else {
            off += std::abs(v);
            worst = std::max(worst, v);
        }
    }
    const double tol = 1e-12 * std::max(1.0, std::abs(diag));
    if (!(diag > 0.0)) throw NonMonotoneStencil(idx, l, m, "diagonal " + std::to_string(diag) + " is not positive");
    if (worst > tol)
        throw NonMonotoneStencil(idx, l, m, "positive off-diagonal " + std::to_string(worst) +
                                                " (cross-derivative dominance)");
    if (diag < off - tol)
        throw NonMonotoneStencil(idx, l, m, "diagonal " + std::to_string(diag) + " below off-diagonal sum " +
                                                std::to_string(off));
}

struct NodeRows {
    bool dirichlet = false;
    double value = 0.0;
    bool controlled = false;
    std::vector<SparseRow> rows;  // one per control, or one if not controlled
    std::vector<double> rhs;
};

DiscreteSystem assemble(const Grid& g, int nL, int nM, int threads, const std::function<NodeRows(int)>& nodeFn) {
    const int nn = g.size();
    std::vector<NodeRows> nodes(nn);
    parallelFor(nn, threads, [&](std::size_t i) { nodes[i] = nodeFn(static_cast<int>(i)); });

    DiscreteSystem sys;
    sys.grid = g;
    sys.nLambda = nL;
    sys.nMu = nM;
    sys.unknownOf.assign(nn, -1);
    sys.fixed = Vec::Zero(nn);
    for (int i = 0; i < nn; ++i) {
        if (nodes[i].dirichlet) {
            sys.fixed[i] = nodes[i].value;
        } else {
            sys.unknownOf[i] = static_cast<int>(sys.nodeOf.size());
            sys.nodeOf.push_back(i);
            sys.controlled.push_back(nodes[i].controlled ? 1 : 0);
        }
    }
    const int nu = sys.unknowns();
    const int nc = nL * nM;
    for (int k = 0; k < nc; ++k) {
        std::vector<Eigen::Triplet<double>> trip;
        Vec rhs(nu);
        for (int u = 0; u < nu; ++u) {
            const NodeRows& nr = nodes[sys.nodeOf[u]];
            const std::size_t which = nr.controlled ? k : 0;
            double r = nr.rhs[which];
            for (const auto& [node, v] : nr.rows[which]) {
                const int col = sys.unknownOf[node];
                if (col >= 0)
                    trip.emplace_back(u, col, v);
                else
                    r -= v * sys.fixed[node];
            }
            rhs[u] = r;
        }
        Eigen::SparseMatrix<double, Eigen::RowMajor> m(nu, nu);
        m.setFromTriplets(trip.begin(), trip.end());
        m.makeCompressed();
        sys.ops.push_back(std::move(m));
        sys.rhs.push_back(std::move(rhs));
    }
    return sys;
}

/// One-sided row gamma.Du = beta at a Top or Bottom layer node, centred on the
/// physical boundary between the layer and its inner neighbour.
NodeRows obliqueRow(const Grid& g, int idx, const Vec& gamma, double beta, bool top) {
    const int n = g.axes() - 1;
    const double hy = g.spacing[n];
    const int inner = g.neighbor(idx, n, top ? -1 : 1);
    requireNeighbor(inner, idx);
    const double gy = gamma[n];
    if (top ? !(gy > 0) : !(gy < 0))
        throw NonMonotoneStencil(idx, -1, -1, "oblique vector has the wrong vertical sign");
    SparseRow row;
    row.emplace_back(idx, std::abs(gy) / hy);
    row.emplace_back(inner, -std::abs(gy) / hy);
    for (int i = 0; i < n; ++i) {
        const double gi = gamma[i];
        if (gi == 0.0) continue;
        const double w = std::abs(gi) / (2 * g.spacing[i]);
        const int step = gi > 0 ? -1 : 1;
        for (int node : {idx, inner}) {
            const int nb = g.neighbor(node, i, step);
            requireNeighbor(nb, idx);
            row.emplace_back(node, w);
            row.emplace_back(nb, -w);
        }
    }
    consolidate(row);
    checkMonotone(row, idx, -1, -1);
    NodeRows nr;
    nr.rows.push_back(std::move(row));
    nr.rhs.push_back(beta);
    return nr;
}

NodeRows dirichletRow(double v) {
    NodeRows nr;
    nr.dirichlet = true;
    nr.value = v;
    return nr;
}

}  // namespace

DiscreteSystem discretizeEps(const ThinProblem& p, double eps, const Grid& grid, const EpsOptions& opt) {
    const int n = p.dim();
    if (!p.geometry().gPlus.isConstant() || !p.geometry().gMinus.isConstant())
        throw PreconditionViolated("the eps-solver needs constant g+ and g-");
    if (!grid.strip || grid.axes() != n + 1) throw PreconditionViolated("discretizeEps needs a strip grid");
    if (grid.count[n] < 8) throw PreconditionViolated("the strip needs at least 8 vertical nodes");
    (void)eps;
    const int nL = p.nLambda(), nM = p.nMu();
    auto nodeFn = [&](int idx) {
        const Vec z = grid.point(idx);
        const Vec x = z.head(n);
        switch (grid.kind[idx]) {
            case NodeKind::Lateral: return dirichletRow(p.betaLateral(z));
            case NodeKind::Top:
            case NodeKind::Bottom: {
                const bool top = grid.kind[idx] == NodeKind::Top;
                if (opt.dirichletTopBottom) return dirichletRow(p.betaLateral(z));
                const Vec zb = lift(x, top ? grid.yUpper : grid.yLower);
                return top ? obliqueRow(grid, idx, p.gammaPlus(zb), p.betaPlus(zb), true)
                           : obliqueRow(grid, idx, p.gammaMinus(zb), p.betaMinus(zb), false);
            }
            case NodeKind::Interior: break;
        }
        NodeRows nr;
        nr.controlled = true;
        for (int l = 0; l < nL; ++l)
            for (int m = 0; m < nM; ++m) {
                SparseRow row = interiorStencil(grid, idx, p.diffusion(l, m, z), p.drift(l, m, z), p.reaction(l, m, z));
                checkMonotone(row, idx, l, m);
                nr.rows.push_back(std::move(row));
                nr.rhs.push_back(p.source(l, m, z));
            }
        return nr;
    };
    return assemble(grid, nL, nM, opt.threads, nodeFn);
}

DiscreteSystem discretizeLimit(const LimitProblem& lp, const Grid& grid, int threads) {
    if (grid.axes() != lp.dim()) throw PreconditionViolated("grid dimension does not match the limit problem");
    const int nL = lp.nLambda(), nM = lp.nMu();
    auto nodeFn = [&](int idx) {
        const Vec x = grid.point(idx);
        if (grid.kind[idx] != NodeKind::Interior) return dirichletRow(lp.dirichlet(x));
        NodeRows nr;
        nr.controlled = true;
        for (int l = 0; l < nL; ++l)
            for (int m = 0; m < nM; ++m) {
                const LimitCoefficients c = lp.coefficients(l, m, x);
                SparseRow row = interiorStencil(grid, idx, c.A, c.b, c.c);
                checkMonotone(row, idx, l, m);
                nr.rows.push_back(std::move(row));
                nr.rhs.push_back(c.f);
            }
        return nr;
    };
    return assemble(grid, nL, nM, threads, nodeFn);
}

Vec discreteOperator(const DiscreteSystem& sys, const Vec& u, std::vector<int>* lambda, std::vector<int>* mu) {
    const int nu = sys.unknowns();
    std::vector<Vec> vals;
    for (std::size_t k = 0; k < sys.ops.size(); ++k) vals.push_back(sys.ops[k] * u - sys.rhs[k]);
    Vec out(nu);
    if (lambda) lambda->assign(nu, -1);
    if (mu) mu->assign(nu, -1);
    for (int i = 0; i < nu; ++i) {
        if (!sys.controlled[i]) {
            out[i] = vals[0][i];
            continue;
        }
        double best = std::numeric_limits<double>::infinity();
        int bl = 0, bm = 0;
        for (int l = 0; l < sys.nLambda; ++l) {
            double sup = -std::numeric_limits<double>::infinity();
            int am = 0;
            for (int m = 0; m < sys.nMu; ++m) {
                const double v = vals[l * sys.nMu + m][i];
                if (v > sup) {
                    sup = v;
                    am = m;
                }
            }
            if (sup < best) {
                best = sup;
                bl = l;
                bm = am;
            }
        }
        out[i] = best;
        if (lambda) (*lambda)[i] = bl;
        if (mu) (*mu)[i] = bm;
    }
    return out;
}

std::vector<int> unchainedRows(const Eigen::SparseMatrix<double, Eigen::RowMajor>& m) {
    const int n = static_cast<int>(m.rows());
    std::vector<std::vector<int>> dependents(n);
    std::vector<char> ok(n, 0);
    std::vector<int> queue;
    for (int i = 0; i < n; ++i) {
        double diag = 0.0, off = 0.0;
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(m, i); it; ++it) {
            if (it.col() == i) {
                diag = it.value();
            } else if (it.value() != 0.0) {
                off += std::abs(it.value());
                dependents[it.col()].push_back(i);
            }
        }
        if (diag - off > 1e-12 * std::abs(diag)) {
            ok[i] = 1;
            queue.push_back(i);
        }
    }
    for (std::size_t q = 0; q < queue.size(); ++q)
        for (int d : dependents[queue[q]])
            if (!ok[d]) {
                ok[d] = 1;
                queue.push_back(d);
            }
    std::vector<int> bad;
    for (int i = 0; i < n; ++i)
        if (!ok[i]) bad.push_back(i);
    return bad;
}

namespace {

Vec gaussSeidel(const Eigen::SparseMatrix<double, Eigen::RowMajor>& m, const Vec& b, Vec x) {
    const int n = static_cast<int>(m.rows());
    for (int sweep = 0; sweep < 1000000; ++sweep) {
        double change = 0.0;
        for (int i = 0; i < n; ++i) {
            double diag = 0.0, acc = b[i];
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(m, i); it; ++it) {
                if (it.col() == i)
                    diag = it.value();
                else
                    acc -= it.value() * x[it.col()];
            }
            const double next = acc / diag;
            change = std::max(change, std::abs(next - x[i]));
            x[i] = next;
        }
        if (change <= 1e-12 * std::max(1.0, x.cwiseAbs().maxCoeff())) return x;
    }
    throw MaxIterExceeded(1000000, std::numeric_limits<double>::quiet_NaN());
}

Vec solveFrozen(const DiscreteSystem& sys, const std::vector<int>& lam, const std::vector<int>& mu, const Vec& start,
                bool gs) {
    const int nu = sys.unknowns();
    std::vector<Eigen::Triplet<double>> trip;
    Vec rhs(nu);
    for (int i = 0; i < nu; ++i) {
        const int k = sys.controlled[i] ? lam[i] * sys.nMu + mu[i] : 0;
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(sys.ops[k], i); it; ++it)
            trip.emplace_back(i, static_cast<int>(it.col()), it.value());
        rhs[i] = sys.rhs[k][i];
    }
    Eigen::SparseMatrix<double, Eigen::RowMajor> m(nu, nu);
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    const auto bad = unchainedRows(m);
    if (!bad.empty()) {
        const int node = sys.nodeOf[bad.front()];
        throw SingularSystem(std::to_string(bad.size()) + " rows reach no Dirichlet or strictly dominant row (first node " +
                             std::to_string(node) + ", " + nodeKindName(sys.grid.kind[node]) + ")");
    }
    if (gs) return gaussSeidel(m, rhs, start);
    Eigen::SparseMatrix<double> cm(m);
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(cm);
    if (lu.info() != Eigen::Success) throw SingularSystem("sparse LU failed: " + lu.lastErrorMessage());
    Vec x = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !x.allFinite()) throw SingularSystem("sparse LU solve failed");
    return x;
}

Vec diagonalScale(const DiscreteSystem& sys) {
    Vec d = Vec::Zero(sys.unknowns());
    for (const auto& op : sys.ops)
        for (int i = 0; i < sys.unknowns(); ++i) d[i] = std::max(d[i], op.coeff(i, i));
    return d;
}

}  // namespace

GridField policyIteration(const DiscreteSystem& sys, const PolicyOptions& opt) {
    const int nu = sys.unknowns();
    GridField out;
    out.grid = sys.grid;
    Vec u = Vec::Zero(nu);
    std::vector<int> lam, mu;
    discreteOperator(sys, u, &lam, &mu);
    const Vec diag = diagonalScale(sys);
    for (int it = 1; it <= opt.maxIter; ++it) {
        u = solveFrozen(sys, lam, mu, u, opt.gaussSeidel);
        std::vector<int> nl, nm;
        const Vec f = discreteOperator(sys, u, &nl, &nm);
        out.residual = nu ? f.cwiseAbs().maxCoeff() : 0.0;
        out.scaledResidual = nu ? f.cwiseAbs().cwiseQuotient(diag).maxCoeff() : 0.0;
        out.residualHistory.push_back(out.scaledResidual);
        out.iterations = it;
        int switches = 0;
        for (int i = 0; i < nu; ++i) switches += (nl[i] != lam[i] || nm[i] != mu[i]) ? 1 : 0;
        out.policySwitches += switches;
        lam.swap(nl);
        mu.swap(nm);
        if (switches == 0) {
            if (out.scaledResidual <= opt.tol) break;
            throw MaxIterExceeded(it, out.scaledResidual);
        }
        if (it == opt.maxIter) throw MaxIterExceeded(it, out.scaledResidual);
    }
    out.values = sys.fixed;
    out.lambda.assign(sys.grid.size(), -1);
    out.mu.assign(sys.grid.size(), -1);
    for (int i = 0; i < nu; ++i) {
        const int node = sys.nodeOf[i];
        out.values[node] = u[i];
        out.lambda[node] = lam[i];
        out.mu[node] = mu[i];
    }
    return out;
}

GridField solveEps(const ThinProblem& p, double eps, const SolverSettings& s, int threads) {
    const Vec x0 = p.omega().lower;
    const Grid g = epsGrid(p.omega(), eps * p.gMinus(x0), eps * p.gPlus(x0), s.nx, s.ny);
    EpsOptions eo;
    eo.threads = threads;
    const DiscreteSystem sys = discretizeEps(p, eps, g, eo);
    return policyIteration(sys, PolicyOptions{s.tol, s.maxIter, s.gaussSeidel});
}

GridField solveLimit(const LimitProblem& lp, const SolverSettings& s, int threads) {
    const DiscreteSystem sys = discretizeLimit(lp, limitGrid(lp.domain(), s.nx), threads);
    return policyIteration(sys, PolicyOptions{s.tol, s.maxIter, s.gaussSeidel});
}

double interpolate(const GridField& u0, const Vec& x) {
    const Grid& g = u0.grid;
    const int n = g.axes();
    std::vector<int> base(n);
    std::vector<double> t(n);
    for (int a = 0; a < n; ++a) {
        const double s = (x[a] - g.origin[a]) / g.spacing[a];
        const int i = std::clamp(static_cast<int>(std::floor(s)), 0, g.count[a] - 2);
        base[a] = i;
        t[a] = std::clamp(s - i, 0.0, 1.0);
    }
    double v = 0.0;
    for (int corner = 0; corner < (1 << n); ++corner) {
        std::vector<int> m = base;
        double w = 1.0;
        for (int a = 0; a < n; ++a) {
            const int bit = (corner >> a) & 1;
            m[a] += bit;
            w *= bit ? t[a] : 1.0 - t[a];
        }
        if (w != 0.0) v += w * u0.values[g.index(m)];
    }
    return v;
}

PerturbationReport comparisonPerturbation(const LimitProblem& lp, const std::function<Jet(const Vec&)>& s, int nx,
                                          int budget) {
    const Grid g = limitGrid(lp.domain(), nx);
    PerturbationReport rep;
    std::vector<double> sv(g.size());
    double m = std::numeric_limits<double>::infinity();
    double smin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < g.size(); ++i) {
        const Vec x = g.point(i);
        const Jet j = s(x);
        sv[i] = j.value;
        smin = std::min(smin, j.value);
        for (int l = 0; l < lp.nLambda(); ++l)
            for (int mu = 0; mu < lp.nMu(); ++mu)
                m = std::min(m, quadForm(RowVec(j.grad.transpose()), lp.coefficients(l, mu, x).A));
    }
    if (!(m > 1e-12)) throw SearchExhausted("positive**", "Ds A Ds^T = " + std::to_string(m) + " on the limit grid");
    rep.sShift = smin;
    rep.sScale = 1.0 / std::sqrt(m);
    rep.alpha = 2.0;
    for (int k = 0; k <= budget; ++k, rep.alpha *= 2) {
        Vec psi(g.size());
        for (int i = 0; i < g.size(); ++i) psi[i] = std::exp(rep.alpha * rep.sScale * (sv[i] - smin));
        if (!psi.allFinite()) break;
        rep.maxG0 = -std::numeric_limits<double>::infinity();
        rep.nodes = 0;
        for (int i = 0; i < g.size(); ++i) {
            if (g.kind[i] != NodeKind::Interior) continue;
            ++rep.nodes;
            const Vec x = g.point(i);
            for (int l = 0; l < lp.nLambda(); ++l)
                for (int mu = 0; mu < lp.nMu(); ++mu) {
                    const LimitCoefficients c = lp.coefficients(l, mu, x);
                    double v = 0.0;
                    for (const auto& [node, w] : interiorStencil(g, i, c.A, c.b, 0.0)) v += w * psi[node];
                    if (v > rep.maxG0) {
                        rep.maxG0 = v;
                        rep.witness = x;
                    }
                }
        }
        if (rep.maxG0 <= -0.5) {
            rep.passed = true;
            return rep;
        }
    }
    return rep;
}

}  // namespace thinlim
