#include "thinlim/barriers.hpp"
#include "thinlim/config.hpp"
#include "thinlim/ellipticity.hpp"
#include "thinlim/experiment.hpp"
#include "thinlim/reduction.hpp"
#include "thinlim/report.hpp"
#include "thinlim/solver.hpp"
#include "thinlim/transform.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

using namespace thinlim;

namespace {

struct Globals {
    std::string config;
    std::string out = "out";
    unsigned long seed = 1;
    int threads = 1;
};

ProblemConfig load(const Globals& g) {
    if (g.config.empty()) throw ConfigError("--config is required");
    return loadConfig(g.config);
}

std::string outPath(const Globals& g, const std::string& name) { return g.out + "/" + name; }

int cmdValidate(const Globals& g) {
    const auto r = validate(load(g).problem);
    std::cout << formatDiagnostics(r);
    return r.passed ? 0 : 2;
}

int cmdCertify(const Globals& g) {
    const ThinProblem p = load(g).problem;
    const int n = p.dim();
    const auto nodes = boxLattice(p.omega(), n == 1 ? 129 : 33);
    const auto bnodes = boxBoundary(p.omega(), n == 1 ? 2 : 33);
    const auto ic = interiorCertificate(p, nodes, 1e-8, g.threads);
    const auto bc = boundaryCertificate(p, bnodes, 1e-8, g.threads);
    std::cout << formatCertificate("interior certificate", ic) << formatCertificate("boundary certificate", bc)
              << formatEquivalence(equivalenceCheck(p, nodes, bnodes));
    return ic.passed && bc.passed ? 0 : 3;
}

int cmdReduce(const Globals& g) {
    const ThinProblem p = load(g).problem;
    const LimitProblem lp = reduce(p);
    std::cout << formatRepresentation(representationCheck(p, lp, 1000, g.seed), subadditivityCheck(lp, 200, g.seed),
                                      estimateBounds(lp));
    std::vector<std::string> header;
    for (int a = 0; a < p.dim(); ++a) header.push_back("x" + std::to_string(a + 1));
    for (const char* h : {"lambda", "mu", "A", "b", "c", "f"}) header.push_back(h);
    CsvTable t(header);
    for (const Vec& x : boxLattice(p.omega(), p.dim() == 1 ? 33 : 9))
        for (int l = 0; l < lp.nLambda(); ++l)
            for (int m = 0; m < lp.nMu(); ++m) {
                const auto c = lp.coefficients(l, m, x);
                std::vector<std::string> row;
                for (int a = 0; a < x.size(); ++a) row.push_back(fmt(x[a]));
                row.push_back(std::to_string(l));
                row.push_back(std::to_string(m));
                const Eigen::Map<const Vec> a(c.A.data(), c.A.size());
                row.push_back("\"" + fmtVec(a) + "\"");
                row.push_back("\"" + fmtVec(c.b) + "\"");
                row.push_back(fmt(c.c));
                row.push_back(fmt(c.f));
                t.add(std::move(row));
            }
    writeFile(outPath(g, "limit_coefficients.csv"), t.str());
    return 0;
}

int cmdTransform(const Globals& g) {
    const ThinProblem p = load(g).problem;
    const DistortionMap map = DistortionMap::fromProblem(p);
    const auto hb = checkHatBoundary(p, map);
    const auto tr = transplantEllipticity(p, map, boxLattice(p.omega(), p.dim() == 1 ? 129 : 33));
    std::cout << formatHatBoundary(hb, map) << formatCertificate("transplanted certificate", tr.certificate)
              << "transplant discrepancy=" << fmt(tr.maxDiscrepancy) << '\n';
    return hb.passed && tr.certificate.passed ? 0 : 1;
}

int cmdBarrier(const Globals& g, double eps, bool dump) {
    const ThinProblem p = load(g).problem;
    SearchOptions so;
    so.threads = g.threads;
    BarrierFamily fam;
    try {
        fam = findBarriers(p, so);
    } catch (const SearchExhausted& e) {
        std::cout << e.what() << '\n';
        return 4;
    }
    if (!(eps > 0)) eps = fam.params.eps1 / 2;
    const BarrierPair pair = fam.at(eps);
    std::cout << formatParams(fam.params) << "eps=" << fmt(eps) << '\n' << formatMargins(pair.margins);
    if (dump) {
        const Vec x0 = p.omega().lower;
        writeFile(outPath(g, "barriers.csv"),
                  barrierCsv(pair, p.omega(), eps * p.gMinus(x0), eps * p.gPlus(x0), p.dim() == 1 ? 33 : 9, 9));
    }
    return pair.margins.passed ? 0 : 4;
}

int cmdSolve(const Globals& g, const ProblemConfig& cfg, std::optional<double> eps, const SolverSettings& s,
             const std::string& csv) {
    GridField u;
    if (eps) {
        u = solveEps(cfg.problem, *eps, s, g.threads);
    } else {
        u = solveLimit(reduce(cfg.problem), s, g.threads);
    }
    std::cout << "residual=" << fmt(u.residual) << " scaled_residual=" << fmt(u.scaledResidual)
              << " iterations=" << u.iterations << " policy_switches=" << u.policySwitches << '\n';
    writeFile(csv.empty() ? outPath(g, eps ? "solution_eps.csv" : "solution_limit.csv") : csv, fieldCsv(u));
    return 0;
}

int cmdConverge(const Globals& g) {
    const ProblemConfig cfg = load(g);
    ExperimentPlan plan;
    plan.problem = cfg.problem;
    plan.eps = cfg.experiment.eps;
    plan.nx = cfg.experiment.nx;
    plan.ny = cfg.experiment.ny;
    plan.solver = cfg.solver;
    plan.threads = g.threads;
    plan.search.threads = g.threads;
    const ConvergenceTable t = convergenceExperiment(plan);
    writeFile(outPath(g, "convergence.csv"), convergenceCsv(t));
    writeFile(outPath(g, "timing.csv"), timingCsv(t));
    std::cout << formatConvergence(t);
    return !t.hasVerdict || t.verdict ? 0 : 1;
}

int cmdCounterexample(int nTheta) {
    const auto r = circleObstructionDemo(defaultObstructionCandidates(), nTheta);
    std::cout << formatObstruction(r);
    return r.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"thin-domain limit toolkit"};
    Globals g;
    app.add_option("--config", g.config, "problem description (INI)");
    app.add_option("--out", g.out, "output directory");
    app.add_option("--seed", g.seed, "random seed");
    app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
    app.require_subcommand(1);

    auto* validateCmd = app.add_subcommand("validate", "check standing assumptions");
    auto* certifyCmd = app.add_subcommand("certify", "ellipticity certificates");
    auto* reduceCmd = app.add_subcommand("reduce", "build the limit problem");
    auto* transformCmd = app.add_subcommand("transform", "distortion map checks");
    auto* barrierCmd = app.add_subcommand("barrier", "barrier parameter search");
    double barrierEps = 0.0;
    bool dump = false;
    barrierCmd->add_option("--eps", barrierEps, "eps for the margins (default eps1/2)");
    barrierCmd->add_flag("--dump", dump, "write barrier values as CSV");

    auto* solveCmd = app.add_subcommand("solve", "solve the eps-problem (--eps) or the limit problem");
    std::optional<double> solveEpsValue;
    SolverSettings ss;
    std::string solveOut;
    solveCmd->add_option("--eps", solveEpsValue, "strip scale; omit for the limit problem");
    solveCmd->add_option("--nx", ss.nx, "nodes per horizontal axis");
    solveCmd->add_option("--ny", ss.ny, "vertical levels");
    solveCmd->add_option("--tol", ss.tol, "residual tolerance");
    solveCmd->add_option("--max-iter", ss.maxIter, "policy iterations");
    solveCmd->add_option("--out", solveOut, "CSV path");
    bool gs = false;
    solveCmd->add_flag("--gauss-seidel", gs, "iterative linear solves");

    auto* convergeCmd = app.add_subcommand("converge", "convergence experiment");
    auto* counterCmd = app.add_subcommand("counterexample", "circle obstruction demo");
    int nTheta = 4096;
    counterCmd->add_option("--n-theta", nTheta, "samples on the circle");
    auto* pipelineCmd = app.add_subcommand("pipeline", "all stages");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validateCmd->parsed()) return cmdValidate(g);
        if (certifyCmd->parsed()) return cmdCertify(g);
        if (reduceCmd->parsed()) return cmdReduce(g);
        if (transformCmd->parsed()) return cmdTransform(g);
        if (barrierCmd->parsed()) return cmdBarrier(g, barrierEps, dump);
        if (solveCmd->parsed()) {
            ProblemConfig cfg = load(g);
            SolverSettings s = cfg.solver;
            if (solveCmd->count("--nx")) s.nx = ss.nx;
            if (solveCmd->count("--ny")) s.ny = ss.ny;
            if (solveCmd->count("--tol")) s.tol = ss.tol;
            if (solveCmd->count("--max-iter")) s.maxIter = ss.maxIter;
            s.gaussSeidel = s.gaussSeidel || gs;
            return cmdSolve(g, cfg, solveEpsValue, s, solveOut);
        }
        if (convergeCmd->parsed()) return cmdConverge(g);
        if (counterCmd->parsed()) return cmdCounterexample(nTheta);
        if (pipelineCmd->parsed()) {
            const ProblemConfig cfg = load(g);
            const auto r = runPipeline(cfg, PipelineOptions{g.out, g.seed, g.threads}, std::cout);
            return r.exitCode;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config: " << e.what() << '\n';
        return 2;
    } catch (const SearchExhausted& e) {
        std::cerr << e.what() << '\n';
        return 4;
    } catch (const NonMonotoneStencil& e) {
        std::cerr << e.what() << '\n';
        return 5;
    } catch (const MaxIterExceeded& e) {
        std::cerr << e.what() << '\n';
        return 5;
    } catch (const SingularSystem& e) {
        std::cerr << e.what() << '\n';
        return 5;
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }
    return 0;
}
