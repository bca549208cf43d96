#include "thinlim/experiment.hpp"

#include "thinlim/ellipticity.hpp"
#include "thinlim/reduction.hpp"
#include "thinlim/report.hpp"
#include "thinlim/transform.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace thinlim {

namespace {

double secondsSince(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double richardson(const GridField& coarse, const GridField& fine) {
    double d = 0.0;
    for (int i = 0; i < coarse.grid.size(); ++i) {
        auto m = coarse.grid.multi(i);
        for (int& v : m) v *= 2;
        d = std::max(d, std::abs(coarse.values[i] - fine.values[fine.grid.index(m)]));
    }
    return d;
}

}  // namespace

ConvergenceTable convergenceExperiment(const ExperimentPlan& plan) {
    const ThinProblem& p = plan.problem;
    const int n = p.dim();
    for (std::size_t k = 1; k < plan.eps.size(); ++k)
        if (!(plan.eps[k] < plan.eps[k - 1])) throw PreconditionViolated("eps list must be strictly decreasing");
    if (plan.ny.empty() || (plan.ny.size() != 1 && plan.ny.size() != plan.eps.size()))
        throw PreconditionViolated("ny needs one entry or one per eps");

    ConvergenceTable table;
    const LimitProblem lp = reduce(p);
    SolverSettings s = plan.solver;
    s.nx = plan.nx;
    auto t0 = std::chrono::steady_clock::now();
    const GridField u0 = solveLimit(lp, s, plan.threads);
    table.limitSeconds = secondsSince(t0);
    table.limitResidual = u0.scaledResidual;
    SolverSettings sf = s;
    sf.nx = 2 * plan.nx - 1;
    table.discretizationError = richardson(u0, solveLimit(lp, sf, plan.threads));

    std::optional<BarrierFamily> fam;
    if (plan.sandwich) {
        fam = findBarriers(p, plan.search);
        table.barrier = fam->params;
        for (double e : plan.eps)
            if (!(e < fam->params.eps1))
                throw PreconditionViolated("eps=" + fmt(e) + " is not below eps1=" + fmt(fam->params.eps1));
    }

    for (std::size_t k = 0; k < plan.eps.size(); ++k) {
        ConvergenceRow row;
        row.eps = plan.eps[k];
        s.ny = plan.ny.size() == 1 ? plan.ny[0] : plan.ny[k];
        t0 = std::chrono::steady_clock::now();
        const GridField u = solveEps(p, row.eps, s, plan.threads);
        row.seconds = secondsSince(t0);
        row.residual = u.residual;
        row.scaledResidual = u.scaledResidual;
        row.iterations = u.iterations;
        std::optional<BarrierPair> pair;
        if (fam) pair = fam->at(row.eps);
        row.sandwichMargin = pair ? std::numeric_limits<double>::infinity() : std::numeric_limits<double>::quiet_NaN();
        double upMax = -std::numeric_limits<double>::infinity(), loMin = std::numeric_limits<double>::infinity();
        for (int i = 0; i < u.grid.size(); ++i) {
            if (!u.grid.insideStrip(i)) continue;
            ++row.nodes;
            const Vec z = u.grid.point(i);
            const Vec x = z.head(n);
            row.error = std::max(row.error, std::abs(u.values[i] - interpolate(u0, x)));
            if (pair) {
                const double up = pair->upper(x, z[n]).value, lo = pair->lower(x, z[n]).value;
                row.sandwichMargin = std::min({row.sandwichMargin, up - u.values[i], u.values[i] - lo});
                upMax = std::max(upMax, up);
                loMin = std::min(loMin, lo);
            }
        }
        row.sandwichWidth = pair ? upMax - loMin : std::numeric_limits<double>::quiet_NaN();
        if (pair && !(row.sandwichMargin >= 0.0)) table.sandwichHolds = false;
        table.rows.push_back(row);
    }

    table.hasVerdict = table.rows.size() >= 2;
    if (table.hasVerdict) {
        table.decreasing = true;
        for (std::size_t k = 1; k < table.rows.size(); ++k)
            table.decreasing = table.decreasing && table.rows[k].error < table.rows[k - 1].error;
        table.withinBand = table.rows.back().error <= 10.0 * table.discretizationError;
        table.belowFloor = true;
        for (const auto& r : table.rows) table.belowFloor = table.belowFloor && r.error <= table.discretizationError;
        table.verdict = ((table.decreasing && table.withinBand) || table.belowFloor) && table.sandwichHolds;
    }
    return table;
}

std::string convergenceCsv(const ConvergenceTable& t) {
    CsvTable csv({"eps", "error", "residual", "scaled_residual", "iterations", "nodes", "sandwich_margin",
                  "sandwich_width"});
    for (const auto& r : t.rows)
        csv.add({fmt(r.eps), fmt(r.error), fmt(r.residual), fmt(r.scaledResidual), std::to_string(r.iterations),
                 std::to_string(r.nodes), fmt(r.sandwichMargin), fmt(r.sandwichWidth)});
    return csv.str();
}

std::string timingCsv(const ConvergenceTable& t) {
    CsvTable csv({"stage", "eps", "seconds"});
    csv.add({"limit", "0", fmt(t.limitSeconds)});
    for (const auto& r : t.rows) csv.add({"eps", fmt(r.eps), fmt(r.seconds)});
    return csv.str();
}

std::string formatConvergence(const ConvergenceTable& t) {
    std::ostringstream os;
    os << "limit residual=" << fmt(t.limitResidual) << " discretization_error=" << fmt(t.discretizationError) << '\n';
    for (const auto& r : t.rows)
        os << "  eps=" << fmt(r.eps) << " E=" << fmt(r.error) << " sandwich_margin=" << fmt(r.sandwichMargin) << '\n';
    if (!t.hasVerdict) {
        os << "verdict: none (single eps)\n";
    } else {
        os << "decreasing=" << (t.decreasing ? "yes" : "no") << " within_band=" << (t.withinBand ? "yes" : "no")
           << " below_floor=" << (t.belowFloor ? "yes" : "no")
           << " sandwich=" << (t.sandwichHolds ? "yes" : "no") << '\n'
           << "verdict: " << (t.verdict ? "pass" : "FAIL") << '\n';
    }
    return os.str();
}

RateReport manufacturedSolutionTest(Manufactured kind, const std::vector<int>& nxList) {
    using std::numbers::pi;
    RateReport rep;
    rep.nx = nxList;
    const double drift = kind == Manufactured::Drift ? 1.0 : 0.0;
    auto exact = [kind](double x) { return kind == Manufactured::Linear ? x : std::sin(pi * x); };
    auto coeff = [kind, drift](int, int, const Vec& x) {
        LimitCoefficients c;
        c.A = Mat::Identity(1, 1);
        c.b = Vec::Constant(1, drift);
        c.sigma = Mat::Identity(1, 1);
        if (kind != Manufactured::Linear) c.f = pi * pi * std::sin(pi * x[0]) - drift * pi * std::cos(pi * x[0]);
        return c;
    };
    Box unit{Vec::Zero(1), Vec::Ones(1)};
    const LimitProblem lp(1, unit, 1, 1, coeff, [exact](const Vec& x) { return exact(x[0]); });
    for (int nx : nxList) {
        SolverSettings s;
        s.nx = nx + 1;
        const GridField u = solveLimit(lp, s);
        double e = 0.0;
        for (int i = 0; i < u.grid.size(); ++i) e = std::max(e, std::abs(u.values[i] - exact(u.grid.point(i)[0])));
        rep.errors.push_back(e);
    }
    // Least-squares slope of log(error) against log(h).
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(nxList.size());
    for (std::size_t i = 0; i < nxList.size(); ++i) {
        const double lx = std::log(1.0 / nxList[i]), ly = std::log(std::max(rep.errors[i], 1e-300));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    rep.rate = m > 1 ? (m * sxy - sx * sy) / (m * sxx - sx * sx) : 0.0;
    switch (kind) {
        case Manufactured::Diffusion:
            rep.name = "diffusion";
            rep.criterion = "rate >= 1.7";
            rep.passed = rep.rate >= 1.7;
            break;
        case Manufactured::Drift:
            rep.name = "drift";
            rep.criterion = "0.9 <= rate <= 2.1";
            rep.passed = rep.rate >= 0.9 && rep.rate <= 2.1;
            break;
        case Manufactured::Linear:
            rep.name = "linear";
            rep.criterion = "error <= 1e-12";
            rep.passed = true;
            for (double e : rep.errors) rep.passed = rep.passed && e <= 1e-12;
            break;
    }
    return rep;
}

namespace {

PipelineResult stop(std::ostream& log, int code, const std::string& stage, const std::string& msg) {
    log << "stage " << stage << ": FAILED\n" << msg << (msg.empty() || msg.back() == '\n' ? "" : "\n");
    return PipelineResult{code, stage, msg};
}

}  // namespace

PipelineResult runPipeline(const ProblemConfig& cfg, const PipelineOptions& opt, std::ostream& log) {
    const ThinProblem& p = cfg.problem;
    const std::string dir = opt.outDir + "/";
    const int n = p.dim();
    std::ostringstream summary;

    const DiagnosticsReport diag = validate(p);
    writeFile(dir + "validate.txt", formatDiagnostics(diag));
    if (!diag.passed) return stop(log, 2, "validate", formatDiagnostics(diag));
    log << "stage validate: ok\n";

    const auto nodes = boxLattice(p.omega(), n == 1 ? 129 : 33);
    const auto bnodes = boxBoundary(p.omega(), n == 1 ? 2 : 33);
    const CertificateReport ic = interiorCertificate(p, nodes, 1e-8, opt.threads);
    const CertificateReport bc = boundaryCertificate(p, bnodes, 1e-8, opt.threads);
    const EquivalenceReport eq = equivalenceCheck(p, nodes, bnodes);
    const std::string cert = formatCertificate("interior certificate", ic) +
                             formatCertificate("boundary certificate", bc) + formatEquivalence(eq);
    writeFile(dir + "certificate.txt", cert);
    if (!ic.passed || !bc.passed) return stop(log, 3, "certify", cert);
    log << "stage certify: ok margin=" << fmt(ic.margin) << '\n';

    LimitProblem lp;
    try {
        lp = reduce(p);
        const auto rep = representationCheck(p, lp, 1000, opt.seed);
        const auto sub = subadditivityCheck(lp, 200, opt.seed);
        const auto bounds = estimateBounds(lp);
        const std::string text = formatRepresentation(rep, sub, bounds);
        writeFile(dir + "reduce.txt", text);
        if (rep.maxDiscrepancy > 1e-8) return stop(log, 1, "reduce", text);
    } catch (const Error& e) {
        return stop(log, 1, "reduce", e.what());
    }
    log << "stage reduce: ok\n";

    if (!p.gamma0IsZero()) {
        try {
            const DistortionMap map = DistortionMap::fromProblem(p);
            const HatBoundaryReport hb = checkHatBoundary(p, map);
            const TransplantReport tr = transplantEllipticity(p, map, nodes);
            const std::string text = formatHatBoundary(hb, map) +
                                     formatCertificate("transplanted certificate", tr.certificate) +
                                     "transplant discrepancy=" + fmt(tr.maxDiscrepancy) + "\n";
            writeFile(dir + "transform.txt", text);
            if (!hb.passed || !tr.certificate.passed) return stop(log, 1, "transform", text);
        } catch (const Error& e) {
            return stop(log, 1, "transform", e.what());
        }
        log << "stage transform: ok\n";
    }

    SearchOptions so;
    so.threads = opt.threads;
    BarrierFamily fam;
    try {
        fam = findBarriers(p, so);
        const BarrierPair pair = fam.at(fam.params.eps1 / 2);
        writeFile(dir + "barrier.txt", formatParams(fam.params) + formatMargins(pair.margins));
        if (!pair.margins.passed) return stop(log, 4, "barrier", formatMargins(pair.margins));
    } catch (const Error& e) {
        return stop(log, 4, "barrier", e.what());
    }
    log << "stage barrier: ok eps1=" << fmt(fam.params.eps1) << '\n';

    try {
        SolverSettings s = cfg.solver;
        const GridField u0 = solveLimit(lp, s, opt.threads);
        writeFile(dir + "limit.csv", fieldCsv(u0));
        const PerturbationReport pr =
            comparisonPerturbation(lp, [&p](const Vec& x) { return Jet{p.s(x), p.sGradient(x), p.sHessian(x)}; }, s.nx);
        writeFile(dir + "perturbation.txt", formatPerturbation(pr));
        summary << "limit: residual=" << fmt(u0.scaledResidual) << " iterations=" << u0.iterations << '\n'
                << formatPerturbation(pr);
    } catch (const Error& e) {
        return stop(log, 5, "solve", e.what());
    }
    log << "stage solve: ok\n";

    ExperimentPlan plan;
    plan.problem = p;
    plan.eps = cfg.experiment.eps;
    plan.nx = cfg.experiment.nx;
    plan.ny = cfg.experiment.ny;
    plan.solver = cfg.solver;
    plan.threads = opt.threads;
    plan.search = so;
    ConvergenceTable table;
    try {
        table = convergenceExperiment(plan);
    } catch (const Error& e) {
        return stop(log, 5, "converge", e.what());
    }
    writeFile(dir + "convergence.csv", convergenceCsv(table));
    writeFile(dir + "timing.csv", timingCsv(table));
    summary << formatConvergence(table);
    writeFile(dir + "summary.txt", summary.str());
    if (table.hasVerdict && !table.verdict) return stop(log, 1, "converge", formatConvergence(table));
    log << "stage converge: ok\n";
    return PipelineResult{0, "done", ""};
}

}  // namespace thinlim
