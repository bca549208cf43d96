#include "thinlim/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace thinlim {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmtVec(const Vec& v) {
    std::string out = "(";
    for (int i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
    return out + ")";
}

void CsvTable::add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

std::string CsvTable::str() const {
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& r) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
        os << '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return os.str();
}

void writeFile(const std::string& path, const std::string& text) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << text;
}

std::string formatDiagnostics(const DiagnosticsReport& r) {
    std::ostringstream os;
    os << "validation: " << (r.passed ? "passed" : "FAILED") << '\n';
    for (const auto& c : r.checks) {
        os << "  " << c.name << ": " << (c.passed ? "ok" : c.failure) << " worst=" << fmt(c.worst);
        if (c.witness.size()) os << " at " << fmtVec(c.witness);
        if (c.lambda >= 0) os << " control=(" << c.lambda << "," << c.mu << ")";
        if (!c.detail.empty()) os << " " << c.detail;
        os << '\n';
    }
    return os.str();
}

std::string formatCertificate(const std::string& title, const CertificateReport& r) {
    std::ostringstream os;
    os << title << ": " << (r.passed ? "passed" : "FAILED") << '\n'
       << "  margin=" << fmt(r.margin) << " threshold=" << fmt(r.threshold) << '\n'
       << "  norm_margin=" << fmt(r.normMargin) << '\n';
    if (r.witness.size()) os << "  witness=" << fmtVec(r.witness) << " control=(" << r.lambda << "," << r.mu << ")\n";
    os << "  grid=" << r.gridSpec << '\n';
    return os.str();
}

std::string formatEquivalence(const EquivalenceReport& r) {
    std::ostringstream os;
    os << "equivalence: " << (r.passed ? "passed" : "FAILED") << " max_discrepancy=" << fmt(r.maxDiscrepancy)
       << " comparisons=" << r.comparisons << '\n';
    return os.str();
}

std::string formatRepresentation(const RepresentationReport& r, const SubadditivityReport& s, const BoundsReport& b) {
    std::ostringstream os;
    os << "representation: samples=" << r.samples << " max_discrepancy=" << fmt(r.maxDiscrepancy);
    if (r.worstX.size()) os << " worst_x=" << fmtVec(r.worstX);
    os << '\n'
       << "subadditivity: samples=" << s.samples << " max_excess=" << fmt(s.maxExcess) << '\n'
       << "bounds: sup=" << fmt(b.supBound) << " lipschitz=" << fmt(b.lipschitzBound) << " C=" << fmt(b.constant)
       << " nodes=" << b.nodes << '\n';
    return os.str();
}

std::string formatHatBoundary(const HatBoundaryReport& r, const DistortionMap& map) {
    std::ostringstream os;
    os << "distortion: r=" << fmt(map.r()) << " affine=" << (map.affine() ? "yes" : "no") << '\n'
       << "hat boundary: " << (r.passed ? "passed" : "FAILED") << " last_component=" << fmt(r.lastComponentError)
       << " tangential_at_zero=" << fmt(r.tangentialAtZero) << " beta_at_zero=" << fmt(r.betaAtZero) << '\n';
    return os.str();
}

std::string formatParams(const BarrierParams& p) {
    std::ostringstream os;
    os << "alpha=" << fmt(p.alpha) << '\n'
       << "Lambda=" << fmt(p.Lambda) << '\n'
       << "C_D=" << fmt(p.C_D) << '\n'
       << "C_alpha=" << fmt(p.C_alpha) << '\n'
       << "eps1=" << fmt(p.eps1) << '\n'
       << "r=" << fmt(p.r) << '\n'
       << "s_shift=" << fmt(p.sShift) << '\n'
       << "s_scale=" << fmt(p.sScale) << '\n'
       << "h=" << p.hExpr << '\n';
    return os.str();
}

std::string formatMargins(const BarrierMargins& m) {
    std::ostringstream os;
    os << "margins: " << (m.passed ? "passed" : "FAILED on " + m.failing) << " nodes=" << m.nodes << '\n';
    for (int i = 0; i < 7; ++i) os << "  m." << i + 1 << "=" << fmt(m.m[i]) << '\n';
    os << "  lateral=" << fmt(m.lateral) << '\n' << "  C=" << fmt(m.C) << '\n';
    return os.str();
}

std::string formatObstruction(const ObstructionReport& r) {
    std::ostringstream os;
    os << "circle obstruction: " << (r.passed ? "every candidate obstructed" : "some candidate not obstructed")
       << " n_theta=" << r.nTheta << '\n';
    for (const auto& c : r.cases)
        os << "  " << c.candidate << ": min=" << fmt(c.minValue) << " at theta=" << fmt(c.thetaMin)
           << " max=" << fmt(c.maxValue) << " ratio=" << fmt(c.ratio) << (c.obstructed ? " obstructed" : "") << '\n';
    return os.str();
}

std::string formatPerturbation(const PerturbationReport& r) {
    std::ostringstream os;
    os << "comparison perturbation: " << (r.passed ? "passed" : "FAILED") << " alpha=" << fmt(r.alpha)
       << " s_scale=" << fmt(r.sScale) << " max_G0=" << fmt(r.maxG0) << " nodes=" << r.nodes;
    if (r.witness.size()) os << " at " << fmtVec(r.witness);
    os << '\n';
    return os.str();
}

std::string fieldCsv(const GridField& u) {
    const Grid& g = u.grid;
    std::vector<std::string> header;
    const int nx = g.strip ? g.axes() - 1 : g.axes();
    for (int a = 0; a < nx; ++a) header.push_back("x" + std::to_string(a + 1));
    if (g.strip) header.push_back("y");
    for (const char* h : {"u", "lambda", "mu", "kind"}) header.push_back(h);
    CsvTable t(header);
    for (int i = 0; i < g.size(); ++i) {
        const Vec p = g.point(i);
        std::vector<std::string> row;
        for (int a = 0; a < p.size(); ++a) row.push_back(fmt(p[a]));
        row.push_back(fmt(u.values[i]));
        row.push_back(std::to_string(u.lambda[i]));
        row.push_back(std::to_string(u.mu[i]));
        row.push_back(nodeKindName(g.kind[i]));
        t.add(std::move(row));
    }
    return t.str();
}

std::string barrierCsv(const BarrierPair& pair, const Box& omega, double yLower, double yUpper, int nx, int ny) {
    std::vector<std::string> header;
    for (int a = 0; a < omega.dim(); ++a) header.push_back("x" + std::to_string(a + 1));
    for (const char* h : {"y", "upper", "lower"}) header.push_back(h);
    CsvTable t(header);
    for (const Vec& x : boxLattice(omega, nx)) {
        for (int j = 0; j < ny; ++j) {
            const double y = yLower + (yUpper - yLower) * j / (ny - 1);
            std::vector<std::string> row;
            for (int a = 0; a < x.size(); ++a) row.push_back(fmt(x[a]));
            row.push_back(fmt(y));
            row.push_back(fmt(pair.upper(x, y).value));
            row.push_back(fmt(pair.lower(x, y).value));
            t.add(std::move(row));
        }
    }
    return t.str();
}

}  // namespace thinlim
